"""Dense complex-matrix kernel.

Matrices are plain ``numpy`` complex arrays.  The helpers here validate the
density-matrix and observable contracts, compute partial traces and trace
norms, and serialize matrices to JSON.
"""
import numpy as np

from .config import DEFAULT, MAX_DIM
from .errors import DimensionError, InvalidInputError


def as_matrix(m):
    """Coerce to a finite 2-D complex array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def _square(m):
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise DimensionError(f"dimension {a.shape[0]} exceeds cap {MAX_DIM}")
    return a


def is_hermitian(m, tol=DEFAULT.hermitian):
    a = as_matrix(m)
    return a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def check_density(m, tol=DEFAULT):
    """Validate a density matrix and return it as an array."""
    a = _square(m)
    if not is_hermitian(a, tol.hermitian):
        raise InvalidInputError("density matrix is not Hermitian")
    if abs(np.trace(a) - 1.0) > tol.trace:
        raise InvalidInputError(f"density matrix trace {np.trace(a).real:.3g} != 1")
    lo = np.linalg.eigvalsh((a + a.conj().T) / 2)[0]
    if lo < -tol.psd:
        raise InvalidInputError(f"density matrix has eigenvalue {lo:.3g} < 0")
    return a


def check_observable(m, tol=DEFAULT):
    """Validate a Hermitian observable with operator norm at most one."""
    a = _square(m)
    if not is_hermitian(a, tol.hermitian):
        raise InvalidInputError("observable is not Hermitian")
    if a.shape[0] and np.max(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))) > 1 + tol.opnorm:
        raise InvalidInputError("observable has operator norm above 1")
    return a


def herm_eig(m, tol=DEFAULT.hermitian):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, V)`` with ``m = V diag(w) V^dagger``.
    """
    a = _square(m)
    if np.max(np.abs(a - a.conj().T), initial=0.0) > tol * max(1.0, np.max(np.abs(a), initial=0.0)):
        raise InvalidInputError("herm_eig needs a Hermitian input")
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def trace_norm(m):
    """Sum of singular values."""
    a = _square(m)
    if a.size == 0:
        return 0.0
    if np.allclose(a, a.conj().T, rtol=0, atol=1e-13):
        return float(np.sum(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def partial_trace(m, dims, keep):
    """Reduce ``m`` onto the sites in ``keep`` (0-based, any order, kept in site order)."""
    a = _square(m)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != a.shape[0]:
        raise DimensionError(f"site dims {dims} do not multiply to {a.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise InvalidInputError(f"keep set {keep} out of range for {len(dims)} sites")
    n = len(dims)
    t = a.reshape(dims + dims)
    traced = [s for s in range(n) if s not in keep]
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    for s in traced:
        letters[n + s] = letters[s]
    out = "".join(letters[s] for s in keep) + "".join(letters[n + s] for s in keep)
    k = int(np.prod([dims[s] for s in keep])) if keep else 1
    return np.einsum("".join(letters) + "->" + out, t).reshape(k, k)


def kron_all(mats):
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out


def to_json(m):
    a = as_matrix(m)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "re": a.real.ravel().tolist(),
        "im": a.imag.ravel().tolist(),
    }


def from_json(obj):
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros(rows * cols)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad matrix JSON: {exc}") from None
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionError("matrix JSON entry count does not match rows*cols")
    return as_matrix((re + 1j * im).reshape(rows, cols))


def random_pure(dim, rng):
    """Haar-random state vector."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(dim, rng, rank=None):
    """Random density matrix from a Ginibre draw of the given rank (full by default)."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim, rng, scale=1.0):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (g + g.conj().T) / 2
