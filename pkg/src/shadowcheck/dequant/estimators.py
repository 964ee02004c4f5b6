"""Median-of-means estimators built on SQ access.

Sample plan for a target ``(eps, delta)`` with a second-moment bound ``V``:
``K = ceil(ln(1/delta))`` groups (made odd) of ``n = ceil(4 V / eps^2)``
samples each; real and imaginary parts take separate medians.  These are
the constants every estimator reports through its ``info`` dict.
"""
import math

import numpy as np

from ..errors import BudgetExceededError, InvalidInputError
from ..rng import as_generator

GROUP_FACTOR = 4.0
DEFAULT_MAX_SAMPLES = 50_000_000


def sample_plan(second_moment, eps, delta, max_samples=DEFAULT_MAX_SAMPLES):
    """``(groups, per_group)`` for the given second-moment bound."""
    if eps <= 0 or not (0 < delta < 1):
        raise InvalidInputError("need eps > 0 and 0 < delta < 1")
    k = max(1, math.ceil(math.log(1 / delta)))
    k += 1 - k % 2
    n = max(1, math.ceil(GROUP_FACTOR * second_moment / eps**2))
    if k * n > max_samples:
        raise BudgetExceededError(f"estimator needs {k * n} samples, budget is {max_samples}")
    return k, n


def median_of_means_complex(z, groups):
    """Coordinate-wise median of group means along axis 0."""
    z = np.asarray(z)
    means = np.stack([b.mean(axis=0) for b in np.array_split(z, groups, axis=0)])
    return np.median(means.real, axis=0) + 1j * np.median(means.imag, axis=0)


def _query(v, idx):
    if callable(v):
        return np.asarray(v(idx), dtype=np.complex128)
    if hasattr(v, "query"):
        return v.query(idx)
    return np.asarray(v)[idx]


def _norm2(v):
    if hasattr(v, "norm2"):
        return v.norm2
    return float(np.sum(np.abs(np.asarray(v)) ** 2))


def inner_samples(u, idx):
    """Per-sample weights ``||u~||^2 conj(u(i)) / |u~(i)|^2`` at sampled ``idx``."""
    return u.tilde_norm2 * np.conj(u.query(idx)) / u.tilde2(idx)


def estimate_inner(u, v, eps, delta, rng=None, v_norm2=None, max_samples=DEFAULT_MAX_SAMPLES, info=None):
    """Estimate ``<u, v> = sum conj(u_i) v_i`` from SQ access to ``u`` and queries to ``v``.

    The second moment is at most ``||u~||^2 ||v||^2``.  ``v_norm2`` bounds
    ``||v||^2`` when ``v`` is only a query function.
    """
    rng = as_generator(rng)
    if v_norm2 is None:
        if callable(v):
            raise InvalidInputError("v_norm2 is required for a callable v")
        v_norm2 = _norm2(v)
        if not callable(v) and not hasattr(v, "query") and np.asarray(v).size != u.N:
            raise InvalidInputError("length mismatch")
    k, n = sample_plan(u.tilde_norm2 * v_norm2, eps, delta, max_samples)
    idx = u.sample(rng, k * n)
    z = inner_samples(u, idx) * _query(v, idx)
    if info is not None:
        info.update(groups=k, per_group=n, second_moment=u.tilde_norm2 * v_norm2)
    return complex(median_of_means_complex(z, k))


def bilinear_samples(A, rng, size):
    """Index pairs ``(i, j) ~ |A_ij|^2`` with weights ``||A||_F^2 A_ij / |A_ij|^2``."""
    i, j, a = A.sample_entries(rng, size, values=True)
    return i, j, A.fro2 / np.conj(a)


def estimate_bilinear(A, x, y, eps, delta, rng=None, x_norm2=None, y_norm2=None,
                      max_samples=DEFAULT_MAX_SAMPLES, info=None):
    """Estimate ``x^dagger A y`` with entry sampling on ``A``.

    The second moment is at most ``||A||_F^2 ||x||^2 ||y||^2``.
    """
    rng = as_generator(rng)
    x_norm2 = _norm2(x) if x_norm2 is None else x_norm2
    y_norm2 = _norm2(y) if y_norm2 is None else y_norm2
    bound = A.fro2 * x_norm2 * y_norm2
    k, n = sample_plan(bound, eps, delta, max_samples)
    i, j, w = bilinear_samples(A, rng, k * n)
    z = np.conj(_query(x, i)) * w * _query(y, j)
    if info is not None:
        info.update(groups=k, per_group=n, second_moment=bound)
    return complex(median_of_means_complex(z, k))


def sketch_product(X, Y, eps, delta, rng=None, max_rows=DEFAULT_MAX_SAMPLES):
    """Normalized row submatrices ``X', Y'`` with ``X'^dagger Y' ~ X^dagger Y``.

    Rows are drawn with probability ``||X_i||^2 / ||X||_F^2`` and both sampled
    rows are divided by ``sqrt(s p_i)``.  One group of ``s = ceil(4/eps^2)``
    rows fails the Frobenius bound with probability at most 1/4; for smaller
    ``delta`` several groups are drawn and the one with the smallest median
    distance to the others is returned.  Returns dense ``(s, N)`` arrays and
    the sampled row indices.
    """
    rng = as_generator(rng)
    if X.N != Y.N:
        raise InvalidInputError("X and Y need the same number of rows")
    s = max(1, math.ceil(4 / eps**2))
    groups = 1 if delta >= 0.25 else max(1, math.ceil(math.log(1 / delta)))
    groups += 1 - groups % 2
    if s * groups > max_rows:
        raise BudgetExceededError(f"sketch needs {s * groups} rows, budget is {max_rows}")
    probs = X.row_norms2 / X.fro2
    cands = []
    for _ in range(groups):
        rows = X.sample_rows(rng, s)
        scale = 1 / np.sqrt(s * probs[rows])
        cands.append((rows, X.row(rows) * scale[:, None], Y.row(rows) * scale[:, None]))
    best = 0
    if groups > 1:
        prods = [xp.conj().T @ yp for _, xp, yp in cands]
        dist = np.array([[np.linalg.norm(a - b) for b in prods] for a in prods])
        best = int(np.argmin(np.median(dist, axis=1)))
    rows, xp, yp = cands[best]
    return xp, yp, rows
