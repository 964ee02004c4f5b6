"""Sketch, orthonormalize, compress and decide, all from SQ access.

Error budget: with ``unit = (beta - alpha) / 4`` the stages get
``unit/8`` (rank cutoff), ``unit/8`` (sketch), ``unit/2`` (inner products and
matrix entries) and ``unit/4`` (final solver tolerance).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ..decider import NO, YES, Decision, solve_minmax
from ..errors import BudgetExceededError, InvalidInputError
from ..rng import as_generator
from .estimators import GROUP_FACTOR, bilinear_samples, inner_samples, median_of_means_complex
from .fkv import DEFAULT_P, fkv_sketch, rank_cutoff_bound
from .sq import SqMatrix, build_sq

SPLIT = {"cutoff": 1 / 8, "sketch": 1 / 8, "estimates": 1 / 2, "solver": 1 / 4}


@dataclass
class DequantBudget:
    """Resource limits for :func:`dequantized_decide`.

    ``max_samples`` caps each estimator batch; a plan that needs more is
    either truncated (and flagged in the report) or, with ``strict``,
    rejected with :class:`BudgetExceededError`.
    """

    p: int = DEFAULT_P
    delta: float = 0.1
    l: float = 0.5
    max_samples: int = 200_000
    gram_tol: float = 0.1
    min_gap: float = 0.01
    strict: bool = False


def _plan(second_moment, eps, delta, max_samples, strict, report, key):
    k = max(1, math.ceil(math.log(1 / delta)))
    k += 1 - k % 2
    n = max(1, math.ceil(GROUP_FACTOR * second_moment / eps**2))
    limited = k * n > max_samples
    if limited:
        if strict:
            raise BudgetExceededError(f"{key}: needs {k * n} samples, budget is {max_samples}")
        n = max(1, max_samples // k)
    achieved = math.sqrt(GROUP_FACTOR * second_moment / n)
    report.setdefault(key, []).append({"groups": k, "per_group": n, "eps_target": eps,
                                       "eps_achieved": achieved, "limited": limited})
    return k, n


@dataclass
class EffectiveBasis:
    """Basis vectors ``b_k = sum_a C[a, k] v_a`` over the pool of sketch vectors."""

    C: np.ndarray
    G: np.ndarray
    pool: list
    kept: list
    report: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.C.shape[1]

    def gram_residual(self):
        if self.size == 0:
            return 0.0
        return float(np.max(np.abs(self.C.conj().T @ self.G @ self.C - np.eye(self.size))))


@dataclass
class CompressedInstance:
    mats: np.ndarray
    targets: np.ndarray
    alpha: float
    beta: float
    report: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.mats.shape[-1] if len(self.mats) else 0


def _pool(sketches):
    vecs, index = [], []
    for j, sk in enumerate(sketches):
        for k, v in enumerate(sk.combinations()):
            vecs.append(v)
            index.append((j, int(sk.T[k])))
    return vecs, index


def estimate_gram(vecs, eps, delta, rng, max_samples=200_000, strict=False, report=None):
    """Estimated ``G[a, b] = <v_a, v_b>``: one sample batch per row ``a``, Hermitian-symmetrized."""
    report = {} if report is None else report
    P = len(vecs)
    G = np.zeros((P, P), dtype=np.complex128)
    for a, va in enumerate(vecs):
        # second moment of row a against a vector of norm <= 2 (sketch vectors are near unit)
        k, n = _plan(va.tilde_norm2 * 2.0, eps, delta, max_samples, strict, report, "gram")
        x = va.sample(rng, k * n)
        w = inner_samples(va, x)
        vals = np.stack([vb.query(x) for vb in vecs], axis=1)
        G[a] = median_of_means_complex(w[:, None] * vals, k)
    return (G + G.conj().T) / 2


def gram_schmidt(G, tol):
    """Gram-Schmidt in the metric ``G``; vectors with residual norm below ``tol`` are dropped."""
    P = G.shape[0]
    cols, kept = [], []
    for a in range(P):
        x = np.zeros(P, dtype=np.complex128)
        x[a] = 1.0
        for c in cols:
            x = x - (c.conj() @ G @ x) * c
        nrm2 = float(np.real(x.conj() @ G @ x))
        if nrm2 < tol**2:
            continue
        cols.append(x / math.sqrt(nrm2))
        kept.append(a)
    C = np.array(cols).T if cols else np.zeros((P, 0), dtype=np.complex128)
    return C, kept


def effective_basis(sketches, tol=0.1, eps=0.01, delta=0.01, rng=None, gram=None,
                    max_samples=200_000, strict=False):
    """Orthonormalize the pool ``{v_{j,t}}`` using estimated inner products.

    ``gram`` may supply the pool Gram matrix directly (exact checks).
    """
    rng = as_generator(rng)
    vecs, index = _pool(sketches)
    if not vecs:
        raise InvalidInputError("empty pool: every sketch is degenerate")
    report = {}
    G = estimate_gram(vecs, eps, delta, rng, max_samples, strict, report) if gram is None else np.asarray(gram)
    C, kept = gram_schmidt(G, tol)
    if not kept:
        raise InvalidInputError("every pool vector was dropped")
    report.update(pool=len(vecs), basis=len(kept))
    basis = EffectiveBasis(C, G, index, kept, report)
    report["gram_residual"] = basis.gram_residual()
    return basis


def _blocks(sketches):
    out, lo = [], 0
    for sk in sketches:
        out.append(np.arange(lo, lo + sk.T.size))
        lo += sk.T.size
    return out


def compress_observables(sketches, basis, eps=0.01, delta=0.01, rng=None, targets=None,
                         alpha=0.0, beta=1.0, max_samples=200_000, strict=False):
    """Matrices of ``Pi_l O_l Pi_l`` in the effective basis.

    ``M_l[s, s'] = v_s^dagger O_l v_s'`` is estimated from one batch of
    entry samples of ``O_l``; the compressed matrix is
    ``C^dagger G[:, T_l] M_l G[T_l, :] C``, symmetrized.
    """
    rng = as_generator(rng)
    vecs, _ = _pool(sketches)
    report = {}
    mats = []
    for sk, blk in zip(sketches, _blocks(sketches)):
        if blk.size == 0:
            mats.append(np.zeros((basis.size, basis.size), dtype=np.complex128))
            continue
        op = sk.op
        k, n = _plan(op.fro2 * 4.0, eps, delta, max_samples, strict, report, "entries")
        i, j, w = bilinear_samples(op, rng, k * n)
        vi = np.stack([vecs[b].query(i) for b in blk], axis=1)
        vj = np.stack([vecs[b].query(j) for b in blk], axis=1)
        z = np.conj(vi)[:, :, None] * (w[:, None, None] * vj[:, None, :])
        M = median_of_means_complex(z, k)
        left = basis.C.conj().T @ basis.G[:, blk]
        mat = left @ M @ left.conj().T
        mats.append((mat + mat.conj().T) / 2)
    y = np.zeros(len(mats)) if targets is None else np.asarray(targets, dtype=float)
    return CompressedInstance(np.array(mats), y, alpha, beta, report)


def exact_compression(sketches, basis):
    """Explicit ``<b_k| Pi_l O_l Pi_l |b_k'>`` (desk-scale oracle)."""
    V = np.hstack([sk.vectors() for sk in sketches])
    B = V @ basis.C
    out = []
    for sk, blk in zip(sketches, _blocks(sketches)):
        Vl = V[:, blk]
        Pi_b = Vl.conj().T @ B
        M = Vl.conj().T @ sk.op.dense() @ Vl
        out.append(Pi_b.conj().T @ M @ Pi_b)
    return np.array(out)


def _as_ops(obs):
    out = []
    for o in obs:
        op = o if isinstance(o, SqMatrix) else build_sq(o)
        if not isinstance(op, SqMatrix):
            raise InvalidInputError("observables must be matrices or (lambdas, vectors) pairs")
        out.append(op)
    return out


def dequantized_decide(obs, targets, alpha, beta, budget=None, rng=None, fro_bounds=None):
    """Decide an observable-consistency instance from SQ access alone.

    Steps: rank cutoff per observable, sketch, effective basis, compression,
    then the trace-at-most-one program on the basis; YES iff the optimum is
    at most ``alpha + (beta - alpha)/2``.
    """
    budget = DequantBudget() if budget is None else budget
    rng = as_generator(rng)
    gap = beta - alpha
    if gap < budget.min_gap:
        raise InvalidInputError(f"gap {gap} is below the configured minimum {budget.min_gap}")
    ops = _as_ops(obs)
    y = np.asarray(targets, dtype=float)
    if len(y) != len(ops):
        raise InvalidInputError("one target per observable is required")
    unit = gap / 4
    eta = SPLIT["cutoff"] * unit
    sketch_eps = SPLIT["sketch"] * unit
    est_eps = SPLIT["estimates"] * unit
    solver_tol = SPLIT["solver"] * unit
    fro2 = [op.fro2 for op in ops] if fro_bounds is None else [float(f) ** 2 for f in fro_bounds]
    report = {"unit": unit, "split": SPLIT, "p": budget.p}

    sketches = []
    for op, f2 in zip(ops, fro2):
        r = min(rank_cutoff_bound(f2, eta, budget.l), budget.p)
        sketches.append(fkv_sketch(op, r, eps=sketch_eps, delta=budget.delta, p=budget.p, rng=rng))
    report["ranks"] = [sk.r for sk in sketches]
    report["kept"] = [int(sk.T.size) for sk in sketches]

    def finish(chi, rho, it, lb, basis_size):
        report["basis"] = basis_size
        report["chi_star"] = chi
        verdict = YES if chi <= alpha + gap / 2 else NO
        report["verdict"] = verdict
        return Decision(verdict, chi, rho, it, chi - lb, lb, report)

    if sum(report["kept"]) == 0:
        chi = float(np.max(np.abs(y)))
        report["degenerate"] = True
        return finish(chi, None, 0, chi, 0)

    pool = sum(report["kept"])
    # entries of the compressed matrices combine about pool^2 estimates
    entry_eps = est_eps / max(1, pool)
    basis = effective_basis(sketches, tol=budget.gram_tol, eps=entry_eps, delta=budget.delta, rng=rng,
                            max_samples=budget.max_samples, strict=budget.strict)
    comp = compress_observables(sketches, basis, eps=entry_eps, delta=budget.delta, rng=rng, targets=y,
                                alpha=alpha, beta=beta, max_samples=budget.max_samples, strict=budget.strict)
    report["estimates"] = {"gram": basis.report.get("gram", []), "entries": comp.report.get("entries", [])}
    report["gram_residual"] = basis.report["gram_residual"]
    chi, rho, lb, it = solve_minmax(comp.mats, y, tol=solver_tol, trace_le_one=True)
    return finish(chi, rho, it, lb, basis.size)
