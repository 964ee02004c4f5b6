"""Integer weight matrices: domain enumeration, trace-norm filter and the chain DP."""
from functools import lru_cache
from itertools import product
from math import comb

import numpy as np

from .. import kernels
from ..errors import BudgetExceededError, InvalidInputError

DEFAULT_BUDGET = 5_000_000


def domain_size(L, m):
    """Number of ``m x m`` nonnegative integer matrices summing to ``L``."""
    return comb(L + m * m - 1, m * m - 1)


@lru_cache(maxsize=4)
def _domain_cached(L, cells):
    out = kernels.compositions(L, cells)
    out.setflags(write=False)
    return out


def enumerate_domain(L, m, budget=DEFAULT_BUDGET):
    """All weight matrices as rows of shape ``(|D|, m*m)``, lexicographic order."""
    size = domain_size(L, m)
    if size > budget:
        raise BudgetExceededError(f"domain has {size} matrices, budget is {budget}")
    return _domain_cached(L, m * m)


def pruned_domain(center, L, radius=2, budget=DEFAULT_BUDGET):
    """Weight matrices near ``center`` on its support.

    Cells outside the support of ``center`` stay zero.  Each supported cell but
    the last ranges over ``center +- radius`` (clipped at zero); the last
    supported cell absorbs the remainder so that every matrix sums to ``L``.
    """
    center = np.asarray(center, dtype=np.int64).ravel()
    supp = np.flatnonzero(center)
    if supp.size == 0:
        raise InvalidInputError("center has empty support")
    free = supp[:-1]
    ranges = [np.arange(max(0, center[c] - radius), center[c] + radius + 1) for c in free]
    count = int(np.prod([len(r) for r in ranges])) if ranges else 1
    if count > budget:
        raise BudgetExceededError(f"pruned domain has {count} candidates, budget is {budget}")
    out = np.zeros((count, center.size), dtype=np.int64)
    if ranges:
        grids = np.meshgrid(*ranges, indexing="ij")
        for c, g in zip(free, grids):
            out[:, c] = g.ravel()
    out[:, supp[-1]] = L - out.sum(axis=1)
    return out[out[:, supp[-1]] >= 0]


def pair_basis(alphabet):
    """Flattened ``eta_j (x) eta_k`` for all ``(j, k)``, shape ``(m*m, D*D)``."""
    m = alphabet.m
    mats = alphabet.mats
    return np.array([np.kron(mats[j], mats[k]).ravel() for j in range(m) for k in range(m)])


def residual_trace_norms(sigma, weights, L, alphabet, eps=None, chunk=200_000):
    """Trace norms of ``sigma - (1/L) sum N_jk eta_j (x) eta_k`` for each row of ``weights``.

    With ``eps`` given, rows whose Frobenius bounds already decide the
    comparison with ``eps`` skip the eigenvalue computation and get the bound
    value instead (``inf`` for certain rejects, the upper bound for certain
    accepts), so only the comparison ``<= eps`` is exact.
    """
    sigma = np.asarray(sigma, dtype=np.complex128)
    dim = sigma.shape[0]
    basis = pair_basis(alphabet)
    gram = np.real(basis.conj() @ basis.T)
    cross = np.real(basis.conj() @ sigma.ravel())
    s2 = float(np.real(np.vdot(sigma, sigma)))
    out = np.empty(len(weights))
    for lo in range(0, len(weights), chunk):
        w = np.asarray(weights[lo: lo + chunk], dtype=float) / L
        fro2 = s2 - 2 * (w @ cross) + np.einsum("ij,jk,ik->i", w, gram, w)
        fro = np.sqrt(np.clip(fro2, 0, None))
        res = np.full(len(w), np.inf)
        if eps is None:
            band = np.arange(len(w))
        else:
            upper = np.sqrt(dim) * fro
            sure = upper <= eps
            res[sure] = upper[sure]
            band = np.flatnonzero(~sure & (fro <= eps * (1 + 1e-12)))
        if band.size:
            r = sigma[None] - (w[band] @ basis).reshape(-1, dim, dim)
            r = (r + np.conj(np.swapaxes(r, 1, 2))) / 2
            res[band] = np.sum(np.abs(np.linalg.eigvalsh(r)), axis=1)
        out[lo: lo + chunk] = res
    return out


def trace_filter(sigma, L, eps, alphabet, center=None, radius=2, budget=DEFAULT_BUDGET):
    """Members of the (full or pruned) domain within trace distance ``eps`` of ``sigma``.

    Returns an int array of shape ``(count, m*m)``.
    """
    if center is None:
        dom = enumerate_domain(L, alphabet.m, budget)
    else:
        dom = pruned_domain(center, L, radius, budget)
    norms = residual_trace_norms(sigma, dom, L, alphabet, eps)
    return np.asarray(dom[norms <= eps])


def marginal_match(N, Np):
    """Column sums of ``N`` equal the row sums of ``Np``."""
    N = np.asarray(N)
    Np = np.asarray(Np)
    if N.ndim == 1:
        m = int(round(np.sqrt(N.size)))
        N, Np = N.reshape(m, m), Np.reshape(m, m)
    if N.shape != Np.shape:
        raise InvalidInputError("weight matrices differ in shape")
    return bool(np.array_equal(N.sum(axis=0), Np.sum(axis=1)))


def _keys(*marg_arrays):
    """Consistent integer ids for marginal vectors across several arrays."""
    stacked = np.concatenate(marg_arrays)
    _, inv = np.unique(stacked, axis=0, return_inverse=True)
    inv = inv.ravel()
    out, lo = [], 0
    for a in marg_arrays:
        out.append(inv[lo: lo + len(a)].astype(np.int64))
        lo += len(a)
    return out


def dp_solve(filters, report=None):
    """Find ``N_1..N_{n-1}`` with ``N_i`` in ``filters[i]`` and matching marginals.

    Forward pass: the frontier ``F_{i+1}`` keeps members of ``U_{i+1}`` whose
    row sums equal the column sums of some member of ``F_i``.  A predecessor
    is stored for each survivor, and the returned sequence is recovered by
    backtracking from the first member of the last frontier.  Returns a list
    of ``m x m`` arrays, or None when no sequence exists.
    """
    if not filters:
        raise InvalidInputError("need at least one filter set")
    filters = [np.asarray(u, dtype=np.int64) for u in filters]
    m = int(round(np.sqrt(filters[0].shape[1])))
    fronts = [np.arange(len(filters[0]))]
    preds = []
    for i in range(len(filters) - 1):
        if fronts[-1].size == 0:
            break
        cur = filters[i][fronts[-1]].reshape(-1, m, m)
        nxt = filters[i + 1].reshape(-1, m, m)
        col_keys, row_keys = _keys(cur.sum(axis=1), nxt.sum(axis=2))
        uniq_keys, first = np.unique(col_keys, return_index=True)
        mask = kernels.frontier_mask(uniq_keys, row_keys)
        new_front = np.flatnonzero(mask)
        pos = np.searchsorted(uniq_keys, row_keys[new_front])
        preds.append(fronts[-1][first[pos]])
        fronts.append(new_front)
    if report is not None:
        report["frontier_sizes"] = [int(f.size) for f in fronts]
    if len(fronts) < len(filters) or fronts[-1].size == 0:
        return None
    seq = [int(fronts[-1][0])]
    t = 0
    for i in range(len(filters) - 2, -1, -1):
        prev = int(preds[i][t])
        seq.append(prev)
        t = int(np.searchsorted(fronts[i], prev))
    seq.reverse()
    return [filters[i][j].reshape(m, m).copy() for i, j in enumerate(seq)]


def exhaustive_sequences(filters):
    """All valid sequences by brute force (test oracle for tiny instances)."""
    filters = [np.asarray(u) for u in filters]
    m = int(round(np.sqrt(filters[0].shape[1])))
    good = []
    for combo in product(*[range(len(u)) for u in filters]):
        mats = [filters[i][j].reshape(m, m) for i, j in enumerate(combo)]
        if all(marginal_match(mats[i], mats[i + 1]) for i in range(len(mats) - 1)):
            good.append(combo)
    return good
