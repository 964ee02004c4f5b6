"""Clifford tableaux: uniform sampling and stabilizer-basis expansion.

A tableau for a Clifford ``V`` on ``n`` qubits stores ``2n`` signed Pauli rows.
Rows ``0..n-1`` are the destabilizers ``V X_i V^dagger`` and rows ``n..2n-1``
the stabilizers ``V Z_i V^dagger``; each row is ``(-1)^r P(x, z)`` with the
Hermitian convention ``P(x, z) = prod_q i^{x_q z_q} X_q^{x_q} Z_q^{z_q}``.
Measuring with outcome ``b`` leaves the state ``V|b>``, which is stabilized by
``(-1)^{b_i} V Z_i V^dagger``.

Most functions take batched arrays: ``x`` and ``z`` of shape ``(B, 2n, n)`` and
``r`` of shape ``(B, 2n)``.
"""
from dataclasses import dataclass

import numpy as np

from .config import MAX_DIM
from .errors import DimensionError, InvalidInputError


@dataclass(frozen=True)
class CliffordTableau:
    n: int
    x: np.ndarray
    z: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        n = self.n
        for name, shape in (("x", (2 * n, n)), ("z", (2 * n, n)), ("r", (2 * n,))):
            arr = np.asarray(getattr(self, name), dtype=np.uint8)
            if arr.shape != shape:
                raise DimensionError(f"tableau field {name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)

    @classmethod
    def identity(cls, n):
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), dtype=np.uint8)
        return cls(n, np.vstack([eye, zero]), np.vstack([zero, eye]), np.zeros(2 * n, dtype=np.uint8))

    def is_symplectic(self):
        return bool(is_symplectic(self.x[None], self.z[None])[0])

    def key(self):
        return (self.x.tobytes(), self.z.tobytes(), self.r.tobytes())

    def to_json(self):
        return {
            "x": [_bits_to_hex(row) for row in self.x],
            "z": [_bits_to_hex(row) for row in self.z],
            "phase": [int(b) for b in self.r],
        }

    @classmethod
    def from_json(cls, obj, n):
        try:
            x = np.array([_hex_to_bits(h, n) for h in obj["x"]], dtype=np.uint8)
            z = np.array([_hex_to_bits(h, n) for h in obj["z"]], dtype=np.uint8)
            r = np.array(obj["phase"], dtype=np.uint8)
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidInputError(f"bad tableau JSON: {exc}") from None
        return cls(n, x.reshape(2 * n, n), z.reshape(2 * n, n), r)


def _bits_to_hex(bits):
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return format(v, "x")


def _hex_to_bits(h, n):
    v = int(h, 16)
    if v >> n:
        raise ValueError(f"hex row {h} wider than {n} bits")
    return [(v >> (n - 1 - q)) & 1 for q in range(n)]


def symplectic_product(u, v, n):
    """Symplectic form of bit vectors ``(x | z)`` along the last axis."""
    return (np.sum(u[..., :n] * v[..., n:] + u[..., n:] * v[..., :n], axis=-1) & 1).astype(np.uint8)


def is_symplectic(x, z):
    """Batched check that the rows obey the canonical commutation relations."""
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    n = x.shape[-1]
    gram = (np.einsum("bik,bjk->bij", x, z) + np.einsum("bik,bjk->bij", z, x)) & 1
    omega = np.zeros((2 * n, 2 * n), dtype=np.int64)
    omega[:n, n:] = np.eye(n, dtype=np.int64)
    omega[n:, :n] = np.eye(n, dtype=np.int64)
    return np.all(gram == omega, axis=(1, 2))


def sample_cliffords(n, count, rng):
    """Draw ``count`` tableaux uniformly from the n-qubit Clifford group.

    Rows are built pair by pair: a uniform nonzero vector in the symplectic
    complement of the earlier pairs, then a uniform partner with symplectic
    product one.  With uniform sign bits this is uniform over the group
    modulo global phase.
    """
    if n < 1 or n > 12:
        raise DimensionError("Clifford sampling supports 1 <= n <= 12")
    m = 2 * n
    a_rows = np.zeros((count, n, m), dtype=np.uint8)
    b_rows = np.zeros((count, n, m), dtype=np.uint8)

    for i in range(n):
        todo = np.arange(count)
        while todo.size:
            v = rng.integers(0, 2, size=(todo.size, m), dtype=np.uint8)
            v = project_rows(v, a_rows[todo], b_rows[todo], i, n)
            ok = v.any(axis=1)
            a_rows[todo[ok], i] = v[ok]
            todo = todo[~ok]
        todo = np.arange(count)
        while todo.size:
            v = rng.integers(0, 2, size=(todo.size, m), dtype=np.uint8)
            v = project_rows(v, a_rows[todo], b_rows[todo], i, n)
            ok = symplectic_product(v, a_rows[todo, i], n) == 1
            b_rows[todo[ok], i] = v[ok]
            todo = todo[~ok]
    rows = np.concatenate([a_rows, b_rows], axis=1)
    r = rng.integers(0, 2, size=(count, m), dtype=np.uint8)
    return rows[:, :, :n].copy(), rows[:, :, n:].copy(), r


def project_rows(v, a_rows, b_rows, i, n):
    """Project ``v`` onto the symplectic complement of the first ``i`` pairs."""
    for k in range(i):
        a, b = a_rows[:, k], b_rows[:, k]
        va = symplectic_product(v, a, n)[:, None]
        vb = symplectic_product(v, b, n)[:, None]
        v = v ^ (vb * a) ^ (va * b)
    return v


def sample_global_clifford(n, rng):
    """One uniformly random Clifford tableau."""
    x, z, r = sample_cliffords(n, 1, rng)
    return CliffordTableau(n, x[0], z[0], r[0])


def _row_masks(x, z):
    n = x.shape[-1]
    weights = (1 << np.arange(n - 1, -1, -1)).astype(np.int64)
    return x.astype(np.int64) @ weights, z.astype(np.int64) @ weights


def apply_paulis(vecs, xmask, zmask, sign):
    """Batched ``sign * P(x, z) vec`` for state vectors of shape ``(B, D)``."""
    bsz, dim = vecs.shape
    idx = np.arange(dim, dtype=np.int64)
    par = np.bitwise_count(idx[None, :] & zmask[:, None]) & 1
    k = np.bitwise_count(xmask & zmask) % 4
    phase = (1j ** k) * sign
    vals = vecs * (1.0 - 2.0 * par) * phase[:, None]
    out = np.empty_like(vecs)
    np.put_along_axis(out, idx[None, :] ^ xmask[:, None], vals, axis=1)
    return out


def _start_vectors(dim, attempt):
    g = np.random.default_rng(12345 + attempt)
    # unnormalized on purpose: the overlap with any fixed unit vector is O(1)
    return g.standard_normal(dim) + 1j * g.standard_normal(dim)


def stabilizer_states(x, z, r, outcomes):
    """State vectors ``V|b>`` for a batch of tableaux and outcome bit rows.

    Each state is built by projecting a fixed generic vector onto the joint
    eigenspace of the signed stabilizers.  The result is defined up to a global
    phase, which every caller discards by forming projectors.
    """
    x = np.asarray(x, dtype=np.uint8)
    z = np.asarray(z, dtype=np.uint8)
    r = np.asarray(r, dtype=np.int64)
    outcomes = np.asarray(outcomes, dtype=np.int64)
    bsz, m, n = x.shape
    dim = 1 << n
    if dim > MAX_DIM:
        raise DimensionError("stabilizer expansion capped at 12 qubits")
    xm, zm = _row_masks(x, z)
    signs = 1.0 - 2.0 * ((r[:, n:] + outcomes) & 1)
    out = np.empty((bsz, dim), dtype=np.complex128)
    todo = np.arange(bsz)
    attempt = 0
    while todo.size:
        v = np.tile(_start_vectors(dim, attempt), (todo.size, 1))
        for i in range(n):
            v = 0.5 * (v + apply_paulis(v, xm[todo, n + i], zm[todo, n + i], signs[todo, i]))
        norms = np.linalg.norm(v, axis=1)
        ok = norms > 1e-3
        out[todo[ok]] = v[ok] / norms[ok, None]
        todo = todo[~ok]
        attempt += 1
        if attempt > 50:
            raise InvalidInputError("tableau does not define a stabilizer state")
    return out


def stabilizer_bases(x, z, r):
    """All ``2^n`` outcome states per tableau, as columns of ``(B, D, D)``.

    Column ``b`` is ``V|b>``; it is obtained from column 0 by applying the
    destabilizers of the set bits of ``b``, each of which flips exactly one
    stabilizer sign.
    """
    x = np.asarray(x, dtype=np.uint8)
    bsz, m, n = x.shape
    dim = 1 << n
    base = stabilizer_states(x, z, r, np.zeros((bsz, n), dtype=np.int64))
    xm, zm = _row_masks(np.asarray(x), np.asarray(z))
    cols = np.empty((bsz, dim, dim), dtype=np.complex128)
    cols[:, :, 0] = base
    ones = np.ones(bsz)
    for b in range(1, dim):
        top = b.bit_length() - 1
        prev = b ^ (1 << top)
        q = n - 1 - top
        cols[:, :, b] = apply_paulis(cols[:, :, prev], xm[:, q], zm[:, q], ones)
    return cols


def enumerate_symplectic(n):
    """Every symplectic ``2n x 2n`` binary matrix, by exhaustive filtering.

    Feasible for ``n <= 2`` only; used as a counting oracle.
    """
    if n > 2:
        raise DimensionError("exhaustive enumeration is limited to n <= 2")
    m = 2 * n
    bits = (np.arange(1 << (m * m))[:, None] >> np.arange(m * m - 1, -1, -1)) & 1
    mats = bits.reshape(-1, m, m).astype(np.uint8)
    keep = is_symplectic(mats[:, :, :n], mats[:, :, n:])
    return mats[keep]
