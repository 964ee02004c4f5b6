"""Classical-shadow protocols: sampling, snapshots and median-of-means recovery.

Three protocols are supported:

* ``local-qubit``: a uniformly random Pauli basis per qubit, snapshot
  ``(x)_j (3|psi_j><psi_j| - I)``.
* ``global-qubit``: a uniformly random n-qubit Clifford, snapshot
  ``(2^n + 1)|psi><psi| - I``.
* ``local-qudit``: per site one of the ``d + 1`` stabilizer bases of an odd
  prime qudit, snapshot ``(x)_j ((d + 1)|phi_j><phi_j| - I)``.

Records are stored column-wise in integer arrays.  Local qubit bases use
0, 1, 2 for X, Y, Z and outcome bits with 0 meaning eigenvalue +1.  Qudit bases
use ``mu`` in ``0..d-1`` for the eigenbasis of ``X Z^mu`` and ``mu = d`` for the
computational basis.
"""
from dataclasses import dataclass, field
from math import ceil, log

import numpy as np

from . import kernels
from .clifford import CliffordTableau, sample_cliffords, stabilizer_bases, stabilizer_states
from .config import DEFAULT, MAX_DIM
from .errors import DimensionError, InvalidInputError
from .linalg import as_matrix, kron_all
from .pauli import PauliString, is_odd_prime

LOCAL = "local-qubit"
GLOBAL = "global-qubit"
QUDIT = "local-qudit"
PROTOCOLS = (LOCAL, GLOBAL, QUDIT)

BASIS_LETTERS = "XYZ"
_S2 = 1 / np.sqrt(2)
# rows: eigenvectors for outcome bit 0 (+1) and bit 1 (-1)
QUBIT_EIGVECS = np.array(
    [
        [[_S2, _S2], [_S2, -_S2]],
        [[_S2, 1j * _S2], [_S2, -1j * _S2]],
        [[1, 0], [0, 1]],
    ],
    dtype=np.complex128,
)


def _single_snapshots(vecs, dplus1):
    proj = np.einsum("...i,...j->...ij", vecs, vecs.conj())
    return dplus1 * proj - np.eye(vecs.shape[-1])


QUBIT_SNAPSHOTS = _single_snapshots(QUBIT_EIGVECS, 3)


def qudit_eigvecs(d):
    """Array ``E[mu, b]`` of the basis vectors ``|phi_{mu, b}>``, shape ``(d+1, d, d)``.

    For ``mu = t < d`` the vector is the eigenvector of ``X Z^t`` with
    eigenvalue ``omega^b``; ``mu = d`` is the computational basis.
    """
    if not is_odd_prime(d):
        raise InvalidInputError(f"d = {d} is not an odd prime")
    j = np.arange(d)
    out = np.empty((d + 1, d, d), dtype=np.complex128)
    for t in range(d):
        for b in range(d):
            expo = (t * (j * (j - 1) // 2) - b * j) % d
            out[t, b] = np.exp(2j * np.pi * expo / d) / np.sqrt(d)
    out[d] = np.eye(d)
    return out


@dataclass(frozen=True)
class LocalRecord:
    """One local measurement round.

    Qubits: ``bases`` over ``"XYZ"`` and ``outcomes`` over ``{+1, -1}``.
    Qudits: ``bases`` are ``mu`` values (``None`` or ``d`` for the Z basis) and
    ``outcomes`` are ``b`` in ``0..d-1``.
    """

    bases: tuple
    outcomes: tuple
    d: int = 2

    def __post_init__(self):
        if len(self.bases) != len(self.outcomes):
            raise InvalidInputError("record bases and outcomes differ in length")

    def codes(self):
        """Integer basis codes and outcome codes, as stored in a Shadow."""
        if self.d == 2:
            try:
                b = [BASIS_LETTERS.index(c) for c in self.bases]
            except ValueError:
                raise InvalidInputError(f"unknown basis label in {self.bases!r}") from None
            if any(o not in (1, -1) for o in self.outcomes):
                raise InvalidInputError("qubit outcomes must be +1 or -1")
            o = [0 if v == 1 else 1 for v in self.outcomes]
            return np.array(b), np.array(o)
        mus = [self.d if m is None else int(m) for m in self.bases]
        if any(m < 0 or m > self.d for m in mus) or any(not 0 <= b < self.d for b in self.outcomes):
            raise InvalidInputError("qudit record label out of range")
        return np.array(mus), np.array(self.outcomes, dtype=np.int64)


@dataclass(frozen=True)
class GlobalRecord:
    tableau: CliffordTableau
    outcome: tuple

    def __post_init__(self):
        if len(self.outcome) != self.tableau.n or any(b not in (0, 1) for b in self.outcome):
            raise InvalidInputError("outcome length or bits inconsistent with tableau")


def local_snapshot_matrix(record):
    """Snapshot matrix of a qubit local record."""
    if record.d != 2:
        raise InvalidInputError("use myz_snapshot_matrix for qudit records")
    bases, bits = record.codes()
    return kron_all([QUBIT_SNAPSHOTS[b, o] for b, o in zip(bases, bits)])


def myz_snapshot_matrix(record, d=None):
    """Snapshot matrix of a qudit local record."""
    d = record.d if d is None else d
    if not is_odd_prime(d):
        raise InvalidInputError(f"d = {d} is not an odd prime")
    rec = record if record.d == d else LocalRecord(record.bases, record.outcomes, d)
    mus, bs = rec.codes()
    table = _single_snapshots(qudit_eigvecs(d), d + 1)
    return kron_all([table[m, b] for m, b in zip(mus, bs)])


def global_snapshot_matrix(record):
    """Snapshot matrix ``(2^n + 1)|psi><psi| - I`` for a Clifford record."""
    tab = record.tableau
    psi = stabilizer_states(tab.x[None], tab.z[None], tab.r[None], np.array([record.outcome]))[0]
    dim = psi.shape[0]
    return (dim + 1) * np.outer(psi, psi.conj()) - np.eye(dim)


def default_blocks(m_obs):
    """Default block count ``ceil(2 ln(2 m_obs))`` (at least 1)."""
    return max(1, ceil(2 * log(2 * max(1, m_obs))))


@dataclass
class Shadow:
    """An ordered list of measurement records plus protocol metadata."""

    protocol: str
    n: int
    d: int
    bases: np.ndarray = None
    outcomes: np.ndarray = None
    tab_x: np.ndarray = None
    tab_z: np.ndarray = None
    tab_r: np.ndarray = None
    K: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise InvalidInputError(f"unknown protocol {self.protocol!r}")
        self.outcomes = np.asarray(self.outcomes, dtype=np.int64).reshape(-1, self.n)
        if self.protocol == GLOBAL:
            self.tab_x = np.asarray(self.tab_x, dtype=np.uint8).reshape(-1, 2 * self.n, self.n)
            self.tab_z = np.asarray(self.tab_z, dtype=np.uint8).reshape(-1, 2 * self.n, self.n)
            self.tab_r = np.asarray(self.tab_r, dtype=np.uint8).reshape(-1, 2 * self.n)
            if not len(self.tab_x) == len(self.tab_z) == len(self.tab_r) == len(self.outcomes):
                raise InvalidInputError("tableau and outcome record counts differ")
        else:
            self.bases = np.asarray(self.bases, dtype=np.int64).reshape(-1, self.n)
            if self.bases.shape != self.outcomes.shape:
                raise InvalidInputError("basis and outcome arrays differ in shape")
            top = 3 if self.protocol == LOCAL else self.d + 1
            ob = 2 if self.protocol == LOCAL else self.d
            if self.bases.size and (self.bases.min() < 0 or self.bases.max() >= top):
                raise InvalidInputError("basis label out of range")
            if self.outcomes.size and (self.outcomes.min() < 0 or self.outcomes.max() >= ob):
                raise InvalidInputError("outcome label out of range")

    @property
    def L(self):
        return len(self.outcomes)

    @property
    def dim(self):
        return self.d**self.n

    def record(self, i):
        if self.protocol == GLOBAL:
            tab = CliffordTableau(self.n, self.tab_x[i], self.tab_z[i], self.tab_r[i])
            return GlobalRecord(tab, tuple(int(b) for b in self.outcomes[i]))
        if self.protocol == LOCAL:
            return LocalRecord(
                tuple(BASIS_LETTERS[b] for b in self.bases[i]),
                tuple(1 - 2 * int(o) for o in self.outcomes[i]),
            )
        mus = tuple(None if m == self.d else int(m) for m in self.bases[i])
        return LocalRecord(mus, tuple(int(b) for b in self.outcomes[i]), self.d)

    def snapshot(self, i):
        rec = self.record(i)
        if self.protocol == GLOBAL:
            return global_snapshot_matrix(rec)
        if self.protocol == LOCAL:
            return local_snapshot_matrix(rec)
        return myz_snapshot_matrix(rec)

    def subset(self, idx):
        idx = np.asarray(idx)
        kw = dict(protocol=self.protocol, n=self.n, d=self.d, K=self.K, meta=dict(self.meta))
        if self.protocol == GLOBAL:
            return Shadow(outcomes=self.outcomes[idx], tab_x=self.tab_x[idx], tab_z=self.tab_z[idx], tab_r=self.tab_r[idx], **kw)
        return Shadow(bases=self.bases[idx], outcomes=self.outcomes[idx], **kw)

    def to_json(self):
        recs = []
        for i in range(self.L):
            if self.protocol == LOCAL:
                recs.append(
                    {
                        "bases": "".join(BASIS_LETTERS[b] for b in self.bases[i]),
                        "outcomes": [1 - 2 * int(o) for o in self.outcomes[i]],
                    }
                )
            elif self.protocol == QUDIT:
                recs.append(
                    {
                        "mus": ["inf" if m == self.d else int(m) for m in self.bases[i]],
                        "bs": [int(b) for b in self.outcomes[i]],
                    }
                )
            else:
                tab = CliffordTableau(self.n, self.tab_x[i], self.tab_z[i], self.tab_r[i])
                recs.append({"tableau": tab.to_json(), "outcome": "".join(str(int(b)) for b in self.outcomes[i])})
        out = {"protocol": self.protocol, "n": self.n, "d": self.d, "K": self.K, "records": recs}
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json(cls, obj):
        try:
            protocol, n, d = obj["protocol"], int(obj["n"]), int(obj["d"])
            recs = obj["records"]
            K = obj.get("K")
            meta = dict(obj.get("meta", {}))
            if protocol == LOCAL:
                bases = [[BASIS_LETTERS.index(c) for c in r["bases"]] for r in recs]
                outs = [[0 if v == 1 else 1 for v in r["outcomes"]] for r in recs]
                return cls(protocol, n, d, bases=np.array(bases).reshape(-1, n), outcomes=np.array(outs).reshape(-1, n), K=K, meta=meta)
            if protocol == QUDIT:
                bases = [[d if m in ("inf", None) else int(m) for m in r["mus"]] for r in recs]
                outs = [r["bs"] for r in recs]
                return cls(protocol, n, d, bases=np.array(bases).reshape(-1, n), outcomes=np.array(outs).reshape(-1, n), K=K, meta=meta)
            if protocol == GLOBAL:
                tabs = [CliffordTableau.from_json(r["tableau"], n) for r in recs]
                outs = [[int(c) for c in r["outcome"]] for r in recs]
                return cls(
                    protocol, n, d,
                    outcomes=np.array(outs).reshape(-1, n),
                    tab_x=np.array([t.x for t in tabs]).reshape(-1, 2 * n, n),
                    tab_z=np.array([t.z for t in tabs]).reshape(-1, 2 * n, n),
                    tab_r=np.array([t.r for t in tabs]).reshape(-1, 2 * n),
                    K=K, meta=meta,
                )
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidInputError(f"bad shadow JSON: {exc}") from None
        raise InvalidInputError(f"unknown protocol {protocol!r}")


# ---------------------------------------------------------------- sampling


def _check_state(rho, dim):
    rho = as_matrix(rho)
    if rho.shape != (dim, dim):
        raise DimensionError(f"state has shape {rho.shape}, expected {(dim, dim)}")
    if dim > MAX_DIM:
        raise DimensionError(f"dimension {dim} above cap")
    return rho


def _rotated_diagonal(rho, rots, d):
    """Diagonal of ``R rho R^dagger`` with ``R`` the tensor product of ``rots``."""
    n = len(rots)
    t = rho.reshape((d,) * (2 * n))
    for s, u in enumerate(rots):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [s])), 0, s)
        t = np.moveaxis(np.tensordot(u.conj(), t, axes=([1], [n + s])), 0, n + s)
    diag = np.real(np.einsum(t.reshape(d**n, d**n), [0, 0], [0]))
    diag = np.clip(diag, 0, None)
    return diag / diag.sum()


def _digits(idx, n, d):
    out = np.empty((len(idx), n), dtype=np.int64)
    rem = np.asarray(idx, dtype=np.int64).copy()
    for s in range(n - 1, -1, -1):
        out[:, s] = rem % d
        rem //= d
    return out


def _sample_local(rho, n, L, rng, d, eigvecs, nbases):
    bases = rng.integers(0, nbases, size=(L, n))
    unif = rng.random(L)
    keys = np.zeros(L, dtype=np.int64)
    for s in range(n):
        keys = keys * nbases + bases[:, s]
    outcomes = np.empty((L, n), dtype=np.int64)
    uniq, inverse = np.unique(keys, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
    for g in range(len(uniq)):
        rows = order[bounds[g]: bounds[g + 1]]
        setting = bases[rows[0]]
        probs = _rotated_diagonal(rho, [eigvecs[m].conj() for m in setting], d)
        cdf = np.cumsum(probs)
        idx = np.minimum(np.searchsorted(cdf, unif[rows] * cdf[-1], side="right"), len(cdf) - 1)
        outcomes[rows] = _digits(idx, n, d)
    return bases, outcomes


def sample_local_shadow(rho, n, L, rng, K=None):
    """Local-Clifford (random Pauli basis) shadow of ``rho`` with ``L`` records."""
    if n < 1 or n > 12:
        raise DimensionError("local shadows support 1 <= n <= 12")
    rho = _check_state(rho, 2**n)
    bases, outcomes = _sample_local(rho, n, L, rng, 2, QUBIT_EIGVECS, 3)
    return Shadow(LOCAL, n, 2, bases=bases, outcomes=outcomes, K=K)


def sample_myz_shadow(rho, n, d, L, rng, K=None):
    """Qudit local-Clifford shadow over the ``d + 1`` stabilizer bases per site."""
    if not is_odd_prime(d) or d > 13:
        raise InvalidInputError("d must be an odd prime at most 13")
    rho = _check_state(rho, d**n)
    bases, outcomes = _sample_local(rho, n, L, rng, d, qudit_eigvecs(d), d + 1)
    return Shadow(QUDIT, n, d, bases=bases, outcomes=outcomes, K=K)


def _chunk(n):
    return max(1, 2**22 // (4**n))


def sample_global_shadow(rho, n, L, rng, K=None):
    """Global-Clifford shadow of ``rho`` with ``L`` records."""
    if n < 1 or n > 12:
        raise DimensionError("global shadows support 1 <= n <= 12")
    rho = _check_state(rho, 2**n)
    x, z, r = sample_cliffords(n, L, rng)
    unif = rng.random(L)
    outcomes = np.empty((L, n), dtype=np.int64)
    step = _chunk(n)
    for lo in range(0, L, step):
        hi = min(L, lo + step)
        cols = stabilizer_bases(x[lo:hi], z[lo:hi], r[lo:hi])
        probs = np.real(np.einsum("bji,jk,bki->bi", cols.conj(), rho, cols))
        probs = np.clip(probs, 0, None)
        cdf = np.cumsum(probs, axis=1)
        idx = np.sum(cdf < (unif[lo:hi] * cdf[:, -1])[:, None], axis=1)
        outcomes[lo:hi] = _digits(np.minimum(idx, 2**n - 1), n, 2)
    return Shadow(GLOBAL, n, 2, outcomes=outcomes, tab_x=x, tab_z=z, tab_r=r, K=K)


def sample_shadow(protocol, rho, n, L, rng, d=2, K=None):
    if protocol == LOCAL:
        return sample_local_shadow(rho, n, L, rng, K)
    if protocol == GLOBAL:
        return sample_global_shadow(rho, n, L, rng, K)
    if protocol == QUDIT:
        return sample_myz_shadow(rho, n, d, L, rng, K)
    raise InvalidInputError(f"unknown protocol {protocol!r}")


# ---------------------------------------------------------------- recovery


def observable_value(o, snap, tol=DEFAULT.imag):
    """``Re Tr(O snap)``, checking that the imaginary part is negligible."""
    o = as_matrix(o.to_matrix() if isinstance(o, PauliString) else o)
    snap = as_matrix(snap)
    if o.shape != snap.shape[::-1]:
        raise DimensionError(f"observable {o.shape} and snapshot {snap.shape} do not match")
    val = np.sum(o * snap.T)
    if abs(val.imag) > tol * max(1.0, abs(val.real)):
        raise InvalidInputError(f"Tr(O snapshot) has imaginary part {val.imag:.3g}")
    return float(val.real)


def _local_table(p, single_snaps, nbases, nout):
    """``table[s, basis, outcome]`` of per-site factors ``Tr(P_s snap)``."""
    n = p.n
    table = np.empty((n, nbases, nout), dtype=np.complex128)
    for s in range(n):
        if p.d == 2:
            site = PauliString(p.letters[s]).to_matrix()
        else:
            from .pauli import weyl_single

            site = weyl_single(p.d, *p.letters[s])
        table[s] = np.einsum("ij,abji->ab", site, single_snaps)
    return table


def snapshot_values(shadow, o):
    """Per-record values ``Tr(O snap_l)`` as a float array."""
    if shadow.L == 0:
        return np.zeros(0)
    if isinstance(o, PauliString) and shadow.protocol != GLOBAL:
        if o.n != shadow.n or o.d != shadow.d:
            raise DimensionError("Pauli string does not match the shadow")
        if shadow.protocol == LOCAL:
            table = _local_table(o, QUBIT_SNAPSHOTS, 3, 2)
            vals = kernels.local_values(shadow.bases, shadow.outcomes, table)
            return o.coeff * vals.real
        snaps = _single_snapshots(qudit_eigvecs(shadow.d), shadow.d + 1)
        table = _local_table(o, snaps, shadow.d + 1, shadow.d)
        vals = kernels.local_values(shadow.bases, shadow.outcomes, table)
        return o.coeff * (vals.real if o.part == "re" else vals.imag)
    mat = as_matrix(o.to_matrix() if isinstance(o, PauliString) else o)
    if mat.shape != (shadow.dim, shadow.dim):
        raise DimensionError(f"observable shape {mat.shape} does not match dimension {shadow.dim}")
    if shadow.protocol == GLOBAL:
        out = np.empty(shadow.L)
        tr = np.trace(mat).real
        step = max(1, 2**20 // shadow.dim)
        for lo in range(0, shadow.L, step):
            hi = min(shadow.L, lo + step)
            psi = stabilizer_states(shadow.tab_x[lo:hi], shadow.tab_z[lo:hi], shadow.tab_r[lo:hi], shadow.outcomes[lo:hi])
            ev = np.real(np.einsum("bi,ij,bj->b", psi.conj(), mat, psi))
            out[lo:hi] = (shadow.dim + 1) * ev - tr
        return out
    base = shadow.d + 1 if shadow.protocol == QUDIT else 3
    keys = np.zeros(shadow.L, dtype=np.int64)
    for s in range(shadow.n):
        keys = (keys * base + shadow.bases[:, s]) * shadow.d + shadow.outcomes[:, s]
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    vals = np.array([observable_value(mat, shadow.snapshot(i)) for i in first])
    return vals[inverse]


def median_of_means(values, K, chi=None):
    """Median of ``K`` in-order block means, rounded to ``chi`` bits and clamped.

    Blocks follow ``numpy.array_split``; an even ``K`` takes the mean of the
    two middle block means.  Rounding is half-to-even on the binary fraction.
    """
    values = np.asarray(values, dtype=float)
    if K < 1:
        raise InvalidInputError("K must be at least 1")
    if K > len(values):
        raise InvalidInputError(f"K = {K} exceeds the record count {len(values)}")
    med = float(np.median([blk.mean() for blk in np.array_split(values, K)]))
    if chi is not None:
        med = float(np.round(med * 2.0**chi) / 2.0**chi)
    return min(1.0, max(-1.0, med))


def mom_recover(shadow, o, K=None, chi=30):
    """Median-of-means recovery ``A(S, O)`` for one observable."""
    K = K if K is not None else (shadow.K if shadow.K is not None else default_blocks(1))
    if shadow.L == 0:
        raise InvalidInputError("shadow has no records")
    return median_of_means(snapshot_values(shadow, o), K, chi)


def exact_local_distribution(rho, n, d=2):
    """Enumerate every local record with its probability.

    Returns ``(bases, outcomes, weights)``; the basis setting is uniform and the
    outcome follows the Born rule.  Intended for exhaustive checks at small n.
    """
    nb, eig = (3, QUBIT_EIGVECS) if d == 2 else (d + 1, qudit_eigvecs(d))
    settings = _digits(np.arange(nb**n), n, nb)
    outs = _digits(np.arange(d**n), n, d)
    bases, outcomes, weights = [], [], []
    for setting in settings:
        probs = _rotated_diagonal(rho, [eig[m].conj() for m in setting], d)
        bases.append(np.repeat(setting[None], d**n, axis=0))
        outcomes.append(outs)
        weights.append(probs / nb**n)
    return np.concatenate(bases), np.concatenate(outcomes), np.concatenate(weights)
