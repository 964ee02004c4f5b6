"""Observable-consistency decisions.

The worst-case violation ``chi(rho) = max_i |Tr(O_i rho) - y_i|`` is minimized
over density matrices by column generation.  The master LP mixes a growing set
of pure "atom" states; its duals ``w`` give the certified lower bound

    g(w) = lambda_min(sum_i w_i O_i) - w . y,   ||w||_1 <= 1,

and the minimum eigenvector of ``sum_i w_i O_i`` is the next atom.  The loop
stops when the best witness and the best lower bound are within ``tol``.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .config import DEFAULT
from .errors import DimensionError, InvalidInputError, SolverError
from .linalg import as_matrix, check_observable, from_json, to_json
from .pauli import PauliString

YES = "YES"
NO = "NO"


@dataclass
class ObsConInstance:
    """Observables ``O_i`` with targets ``y_i`` and thresholds ``alpha < beta``.

    Observables may be PauliString handles or explicit matrices; matrices are
    expanded once and cached.
    """

    n: int
    observables: list
    targets: np.ndarray
    alpha: float
    beta: float
    d: int = 2
    _mats: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.observables = list(self.observables)
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if len(self.targets) != len(self.observables):
            raise InvalidInputError("observable and target counts differ")
        if np.any(np.abs(self.targets) > 1 + 1e-12):
            raise InvalidInputError("targets must lie in [-1, 1]")
        if not (0 <= self.alpha < self.beta <= 2):
            raise InvalidInputError(f"need 0 <= alpha < beta <= 2, got {self.alpha}, {self.beta}")
        for o in self.observables:
            if isinstance(o, PauliString):
                if o.n != self.n or o.d != self.d:
                    raise DimensionError("Pauli string size does not match the instance")
                if abs(o.coeff) > 1 + 1e-12:
                    raise InvalidInputError("Pauli coefficient above 1 breaks the norm bound")
            else:
                a = as_matrix(o)
                if a.shape != (self.dim, self.dim):
                    raise DimensionError(f"observable shape {a.shape} does not match dimension {self.dim}")

    @property
    def dim(self):
        return self.d**self.n

    @property
    def m(self):
        return len(self.observables)

    @property
    def gap(self):
        return self.beta - self.alpha

    def matrices(self):
        if self._mats is None:
            mats = np.empty((self.m, self.dim, self.dim), dtype=np.complex128)
            for i, o in enumerate(self.observables):
                mats[i] = o.to_matrix() if isinstance(o, PauliString) else check_observable(o)
            self._mats = mats
        return self._mats

    def violation(self, rho):
        """``max_i |Tr(O_i rho) - y_i|`` for a fixed state."""
        if self.m == 0:
            return 0.0
        vals = np.real(np.einsum("kij,ji->k", self.matrices(), rho))
        return float(np.max(np.abs(vals - self.targets)))

    def to_json(self):
        obs = []
        for o in self.observables:
            obs.append(o.to_json() if isinstance(o, PauliString) else {"matrix": to_json(o)})
        out = {"n": self.n, "observables": obs, "targets": self.targets.tolist(), "alpha": self.alpha, "beta": self.beta}
        if self.d != 2:
            out["d"] = self.d
        return out

    @classmethod
    def from_json(cls, obj):
        try:
            obs = []
            for o in obj["observables"]:
                obs.append(from_json(o["matrix"]) if "matrix" in o else PauliString.from_json(o))
            return cls(int(obj["n"]), obs, obj["targets"], float(obj["alpha"]), float(obj["beta"]), int(obj.get("d", 2)))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"bad instance JSON: {exc}") from None


@dataclass
class Decision:
    verdict: str
    chi_star: float
    witness: np.ndarray = None
    iterations: int = 0
    residual: float = 0.0
    lower_bound: float = 0.0
    report: dict = field(default_factory=dict)

    def to_json(self):
        out = {
            "verdict": self.verdict,
            "chi_star": self.chi_star,
            "iterations": self.iterations,
            "residual": self.residual,
            "lower_bound": self.lower_bound,
        }
        if self.report:
            out["report"] = self.report
        return out


def _min_eig(h):
    h = (h + h.conj().T) / 2
    if h.shape[0] <= 64:
        w, v = np.linalg.eigh(h)
        return w[0], v[:, 0]
    w, v = scipy.linalg.eigh(h, subset_by_index=[0, 0])
    return w[0], v[:, 0]


def _lower_bound(mats, y, w, trace_le_one):
    s = np.sum(np.abs(w))
    if s > 1:
        w = w / s
    lam, vec = _min_eig(np.tensordot(w, mats, axes=1))
    if trace_le_one:
        lam = min(lam, 0.0)
    return lam - float(w @ y), vec


def solve_minmax(mats, y, tol=1e-6, trace_le_one=False, cap=DEFAULT.decider_cap, smoothing=0.5):
    """Minimize ``max_i |Tr(O_i rho) - y_i|`` over ``rho >= 0`` with unit (or at most unit) trace.

    Returns ``(chi, rho, lower_bound, iterations)``; ``chi`` is attained by
    ``rho`` and ``chi - lower_bound <= tol`` on return.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    y = np.asarray(y, dtype=float)
    m = len(y)
    if m == 0:
        dim = mats.shape[-1] if mats.ndim == 3 else 1
        rho = np.zeros((dim, dim), dtype=np.complex128) if trace_le_one else np.eye(dim) / dim
        return 0.0, rho, 0.0, 0
    dim = mats.shape[1]

    atoms = []
    for k in range(m):
        h = (mats[k] + mats[k].conj().T) / 2
        atoms.append(_min_eig(h)[1])
        atoms.append(_min_eig(-h)[1])
    best_w = np.zeros(m)
    best_lb = _lower_bound(mats, y, best_w, trace_le_one)[0]

    def atom_values(vecs):
        vecs = np.asarray(vecs)
        return np.real(np.einsum("ai,kij,aj->ka", vecs.conj(), mats, vecs))

    A = atom_values(atoms)
    # the duals are only as accurate as the LP feasibility tolerances, which bound the certifiable gap
    feas = float(np.clip(tol / 10, 1e-10, 1e-7))
    opts = {"primal_feasibility_tolerance": feas, "dual_feasibility_tolerance": feas}
    c_ub, rho, mu = np.inf, None, None
    for it in range(1, cap + 1):
        K = A.shape[1]
        c = np.zeros(K + 1)
        c[-1] = 1.0
        a_ub = np.block([[A, -np.ones((m, 1))], [-A, -np.ones((m, 1))]])
        b_ub = np.concatenate([y, -y])
        if trace_le_one:
            a_ub = np.vstack([a_ub, np.concatenate([np.ones(K), [0.0]])])
            b_ub = np.concatenate([b_ub, [1.0]])
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs", options=opts)
        else:
            a_eq = np.concatenate([np.ones(K), [0.0]])[None]
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs",
                          options=opts)
        if res.status != 0:
            raise SolverError(f"master LP failed: {res.message}")
        mu = np.clip(res.x[:K], 0, None)
        lam = -np.asarray(res.ineqlin.marginals[: 2 * m])
        w_master = lam[:m] - lam[m:]
        vecs = np.asarray(atoms)
        rho = np.einsum("a,ai,aj->ij", mu, vecs, vecs.conj())
        vals = np.real(np.einsum("kij,ji->k", mats, rho))
        c_ub = float(np.max(np.abs(vals - y)))

        lb, vec = _lower_bound(mats, y, w_master, trace_le_one)
        if lb > best_lb:
            best_lb, best_w = lb, w_master
        new = [vec]
        if smoothing > 0 and np.any(best_w):
            w_s = smoothing * best_w + (1 - smoothing) * w_master
            lb_s, vec_s = _lower_bound(mats, y, w_s, trace_le_one)
            if lb_s > best_lb:
                best_lb, best_w = lb_s, w_s
            new.append(vec_s)
        if c_ub - best_lb <= tol:
            return c_ub, rho, best_lb, it
        atoms.extend(new)
        A = np.hstack([A, atom_values(new)])
        if A.shape[1] > 4 * (m + 2) + 50:
            # drop atoms unused by the master, keeping the newest ones
            recent = np.arange(max(0, A.shape[1] - 2 * m - 4), A.shape[1])
            keep = np.union1d(np.flatnonzero(mu > 1e-12), recent)
            atoms = [atoms[i] for i in keep]
            A = A[:, keep]
    raise SolverError(f"column generation did not reach gap {tol} in {cap} iterations (gap {c_ub - best_lb:.3g})")


def min_max_violation(inst, tol=1e-6, cap=DEFAULT.decider_cap):
    """``(chi_star, witness)`` with ``chi_star`` within ``tol`` of the optimum."""
    chi, rho, _, _ = solve_minmax(inst.matrices(), inst.targets, tol=tol, cap=cap)
    return chi, rho


def decide(inst, tol=None, cap=DEFAULT.decider_cap):
    """Midpoint rule: YES iff ``chi_star <= alpha + (beta - alpha)/2``."""
    tol = inst.gap / 8 if tol is None else tol
    chi, rho, lb, it = solve_minmax(inst.matrices(), inst.targets, tol=tol, cap=cap)
    verdict = YES if chi <= inst.alpha + inst.gap / 2 else NO
    return Decision(verdict, chi, rho, it, chi - lb, lb)


def instance_from_shadow(shadow, observables, K=None, chi=30, alpha=0.1, beta=0.3):
    """ObsCon instance with targets recovered from a shadow by median of means."""
    from .shadows import default_blocks, mom_recover

    observables = list(observables)
    K = K if K is not None else (shadow.K or default_blocks(len(observables)))
    ys = [mom_recover(shadow, o, K, chi) for o in observables]
    return ObsConInstance(shadow.n, observables, ys, alpha, beta, shadow.d)


def _bloch(mats):
    paulis = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    c0 = np.real(np.trace(mats, axis1=1, axis2=2)) / 2
    vec = np.real(np.einsum("kij,pji->kp", mats, paulis)) / 2
    return c0, vec


@lru_cache(maxsize=4)
def fibonacci_ball(count):
    """About ``count`` points filling the unit ball: concentric Fibonacci spheres.

    Shell radii are evenly spaced with point counts proportional to ``r^2``,
    so the spacing is close to ``(4 pi / (3 count))^(1/3)`` everywhere; the
    outermost shell is the unit sphere.
    """
    h = (4 * np.pi / (3 * count)) ** (1 / 3)
    shells = max(1, int(np.ceil(1 / h)))
    radii = np.arange(1, shells + 1) / shells
    sizes = np.maximum(1, np.round(count * radii**2 / np.sum(radii**2))).astype(int)
    golden = np.pi * (3 - np.sqrt(5))
    out = []
    for s, (r, k) in enumerate(zip(radii, sizes)):
        j = np.arange(k) + 0.5
        zc = 1 - 2 * j / k
        phi = golden * j + s  # per-shell twist so shells do not line up
        w = np.sqrt(1 - zc**2)
        out.append(r * np.stack([w * np.cos(phi), w * np.sin(phi), zc], axis=1))
    return np.vstack(out)


def brute_force_1q(inst, grid=10**6, refine=200, seed=0):
    """Grid-search oracle for one-qubit instances.

    Evaluates the violation on a Fibonacci ball lattice plus the maximally
    mixed state, then refines around the best point by random sampling in a
    shrinking ball.  The objective is convex, so the refinement cannot be
    trapped away from the minimum.
    """
    if inst.dim != 2:
        raise InvalidInputError("brute_force_1q needs a single qubit")
    if inst.m == 0:
        return 0.0
    c0, vec = _bloch(inst.matrices())
    y = inst.targets

    def f(pts):
        return np.max(np.abs(c0[None] + pts @ vec.T - y[None]), axis=1)

    best_val, best = f(np.zeros((1, 3)))[0], np.zeros(3)
    lattice = fibonacci_ball(grid)
    for lo in range(0, len(lattice), 200_000):
        pts = lattice[lo: lo + 200_000]
        vals = f(pts)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best = vals[k], pts[k]
    rng = np.random.default_rng(seed)
    radius = 2.0 * grid ** (-1 / 3)
    for _ in range(refine):
        d = rng.standard_normal((4000, 3))
        d *= (radius * rng.random(4000) ** (1 / 3) / np.linalg.norm(d, axis=1))[:, None]
        pts = best[None] + d
        norms = np.linalg.norm(pts, axis=1)
        pts[norms > 1] /= norms[norms > 1, None]
        vals = f(pts)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best = vals[k], pts[k]
        else:
            radius *= 0.8
    return float(best_val)
