"""Nearest-neighbour marginals on a chain to an explicit shadow instance.

Steps: exact marginal LP (feasibility and pruning centre), trace-norm filter
of integer weight matrices, chain DP, stitching, and Pauli (or Weyl)
observables on every adjacent pair with targets recovered from the shadow.
"""
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..decider import ObsConInstance, instance_from_shadow
from ..errors import DimensionError, InvalidInputError
from ..linalg import check_density, from_json, to_json
from ..pauli import PauliString, all_pauli_strings, embed, is_odd_prime, weyl_hermitian_strings
from .alphabet import enumerate_alphabet
from .dp import DEFAULT_BUDGET, domain_size, dp_solve, residual_trace_norms, trace_filter
from .ratlp import feasible_point
from .stitch import stitch_global_shadow


@dataclass
class CldmInstance:
    """Marginals ``sigma_{i,i+1}`` on a chain of ``n`` sites of dimension ``d``.

    ``d`` is ``2**ell`` (blocks of ``ell`` qubits) or an odd prime (qudits).
    """

    d: int
    n: int
    sigmas: list
    alpha: float
    beta: float

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError("chain needs at least two sites")
        if not (self.is_qubit or is_odd_prime(self.d)):
            raise InvalidInputError(f"site dimension {self.d} is neither 2^ell nor an odd prime")
        if len(self.sigmas) != self.n - 1:
            raise InvalidInputError(f"need {self.n - 1} marginals, got {len(self.sigmas)}")
        sig = []
        for s in self.sigmas:
            s = check_density(s)
            if s.shape != (self.d**2, self.d**2):
                raise DimensionError(f"marginal has shape {s.shape}, expected {(self.d**2,) * 2}")
            sig.append(s)
        self.sigmas = sig
        if not (0 <= self.alpha < self.beta <= 2):
            raise InvalidInputError("need 0 <= alpha < beta <= 2")

    @property
    def is_qubit(self):
        return self.d in (2, 4, 8)

    @property
    def ell(self):
        return {2: 1, 4: 2, 8: 3}[self.d] if self.is_qubit else None

    def default_alphabet(self, restriction=None):
        if self.is_qubit:
            return enumerate_alphabet(ell=self.ell, restriction=restriction)
        return enumerate_alphabet(d=self.d, restriction=restriction)

    def to_json(self):
        return {"d": self.d, "n": self.n, "sigmas": [to_json(s) for s in self.sigmas], "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(int(obj["d"]), int(obj["n"]), [from_json(s) for s in obj["sigmas"]], float(obj["alpha"]), float(obj["beta"]))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"bad CLDM JSON: {exc}") from None


@dataclass
class LpSolution:
    """Exact per-edge distributions ``p[i][j, k]`` (Fractions)."""

    p: list
    max_residual: float = 0.0

    def as_float(self):
        return [np.array(pi, dtype=float) for pi in self.p]


def _coeffs(alphabet):
    """Per pair ``(j, k)`` the real and imaginary parts of ``eta_j (x) eta_k``, as Fractions."""
    m = alphabet.m
    out = {}
    for j in range(m):
        for k in range(m):
            if alphabet.kind == "qubit":
                from .alphabet import rational_kron

                re, im = rational_kron(alphabet.exact(j), alphabet.exact(k))
            else:
                mat = np.kron(alphabet.mats[j], alphabet.mats[k])
                conv = np.vectorize(lambda v: Fraction(float(v)), otypes=[object])
                re, im = conv(mat.real), conv(mat.imag)
            out[j, k] = (re, im)
    return out


def solve_marginal_lp(inst, alphabet, tol=1e-7):
    """Exact LP over per-edge snapshot distributions.

    The marginal equations hold within ``tol`` on every independent real entry
    (diagonal real parts, upper off-diagonal real and imaginary parts);
    normalization, nonnegativity and shared-site consistency hold exactly.
    Returns an :class:`LpSolution`, or None when the system is infeasible.
    """
    m = alphabet.m
    if alphabet.mats.shape[1] ** 2 != inst.d**2:
        raise DimensionError("alphabet site dimension does not match the instance")
    coeffs = _coeffs(alphabet)
    tol_f = Fraction(tol).limit_denominator(10**12)
    nvars = (inst.n - 1) * m * m
    a_eq, b_eq, a_ub, b_ub = [], [], [], []
    dim = inst.d**2
    for i, sigma in enumerate(inst.sigmas):
        base = i * m * m
        for a in range(dim):
            for b in range(a, dim):
                for part in (0, 1) if a != b else (0,):
                    target = Fraction(float(sigma[a, b].real if part == 0 else sigma[a, b].imag))
                    row = {}
                    for (j, k), pair in coeffs.items():
                        c = pair[part][a, b]
                        if c:
                            row[base + j * m + k] = c
                    if not row:
                        if abs(target) > tol_f:
                            return None
                        continue
                    a_ub.append(row)
                    b_ub.append(target + tol_f)
                    a_ub.append({v: -c for v, c in row.items()})
                    b_ub.append(-target + tol_f)
        a_eq.append({base + c: 1 for c in range(m * m)})
        b_eq.append(1)
    for i in range(inst.n - 2):
        for t in range(m):
            row = {i * m * m + j * m + t: 1 for j in range(m)}
            for k in range(m):
                v = (i + 1) * m * m + t * m + k
                row[v] = row.get(v, 0) - 1
            a_eq.append(row)
            b_eq.append(0)
    x = feasible_point(a_eq, b_eq, a_ub, b_ub, nvars)
    if x is None:
        return None
    p = [np.array(x[i * m * m: (i + 1) * m * m], dtype=object).reshape(m, m) for i in range(inst.n - 1)]
    sol = LpSolution(p)
    resid = 0.0
    for i, sigma in enumerate(inst.sigmas):
        pf = np.array(p[i], dtype=float)
        rec = sum(pf[j, k] * np.kron(alphabet.mats[j], alphabet.mats[k]) for j in range(m) for k in range(m))
        resid = max(resid, float(np.max(np.abs(rec - sigma))))
    sol.max_residual = resid
    return sol


def round_center(p, L):
    """Nearest integer matrix to ``L p`` with the total corrected to exactly ``L``."""
    c = np.rint(np.array(p, dtype=float) * L).astype(np.int64).ravel()
    diff = L - int(c.sum())
    order = np.argsort(-c, kind="stable")
    k = 0
    while diff != 0:
        cell = order[k % len(order)]
        step = 1 if diff > 0 else -1
        if c[cell] + step >= 0:
            c[cell] += step
            diff -= step
        k += 1
    return c


def pair_observables(n_sites, width, d=2):
    """Distinct non-identity Pauli (or Weyl-part) strings on each adjacent site pair."""
    seen, out = set(), []
    if d == 2:
        local = all_pauli_strings(2 * width)
        for i in range(n_sites - 1):
            qubits = list(range(i * width, (i + 2) * width))
            for p in local:
                e = embed(p, n_sites * width, qubits)
                if e.letters not in seen:
                    seen.add(e.letters)
                    out.append(e)
        return out
    local = weyl_hermitian_strings(2, d)
    for i in range(n_sites - 1):
        for p in local:
            e = embed(p, n_sites, [i, i + 1])
            key = (e.letters, e.part)
            neg = (tuple(((-a) % d, (-b) % d) for a, b in e.letters), e.part)
            if key not in seen and neg not in seen:
                seen.add(key)
                out.append(e)
    return out


def trivial_no_instance(n, d, alpha, beta):
    """``{(O, 1), (-O, 1)}`` for a single-site observable ``O``; its optimum is exactly 1."""
    if d == 2:
        z = PauliString("Z" + "I" * (n - 1))
    else:
        z = PauliString(((0, 1),) + ((0, 0),) * (n - 1), d)
    return ObsConInstance(n, [z, z.scaled(-1.0)], [1.0, 1.0], alpha, beta, d)


def reduced_thresholds(inst, eps, chi):
    """Thresholds of the produced instance.

    YES side: every pair Pauli deviates by at most the source ``alpha`` plus
    the stitching error ``eps`` plus rounding.  NO side: a trace distance of
    ``beta - eps`` forces some pair Pauli expectation gap of at least
    ``(beta - eps)/D^2`` (``2 D^2`` for Weyl parts), less ``eps`` for clamping
    and the rounding error.
    """
    rounding = 2.0**-chi
    dim = inst.d**2
    conv = dim**2 if inst.is_qubit else 2 * dim**2
    alpha = inst.alpha + eps + rounding
    beta = (inst.beta - eps) / conv - eps - rounding
    return alpha, beta


@dataclass
class ReductionResult:
    instance: ObsConInstance
    trivial: bool
    shadow: object = None
    sequence: list = None
    report: dict = field(default_factory=dict)


def reduce(inst, L, eps=None, alphabet=None, mode="auto", radius=2, budget=DEFAULT_BUDGET, chi=30):
    """Map a chain-marginal instance to a shadow-consistency instance.

    Returns a :class:`ReductionResult`.  When the marginal LP is infeasible, or
    no integer weight sequence passes the filters, the result is the trivial
    NO instance with the same thresholds.
    """
    t0 = time.perf_counter()
    eps = inst.alpha / 2 if eps is None else float(eps)
    alphabet = inst.default_alphabet() if alphabet is None else alphabet
    width = alphabet.record_width
    n_shadow = inst.n * width if alphabet.kind == "qubit" else inst.n
    d_shadow = 2 if alphabet.kind == "qubit" else inst.d
    alpha, beta = reduced_thresholds(inst, eps, chi)
    if beta <= alpha:
        raise InvalidInputError(f"reduced gap is empty (alpha'={alpha:.4g}, beta'={beta:.4g}); lower eps or widen the source gap")
    report = {"L": L, "eps": eps, "m": alphabet.m, "alpha": alpha, "beta": beta}

    def trivial(reason):
        report["outcome"] = reason
        report["seconds"] = time.perf_counter() - t0
        return ReductionResult(trivial_no_instance(n_shadow, d_shadow, alpha, beta), True, report=report)

    lp = solve_marginal_lp(inst, alphabet)
    report["lp_feasible"] = lp is not None
    if lp is None:
        return trivial("lp-infeasible")
    report["lp_residual"] = lp.max_residual

    if mode == "auto":
        mode = "full" if alphabet.m <= 3 and domain_size(L, alphabet.m) <= budget else "pruned"
    report["mode"] = mode
    filters = []
    for i, sigma in enumerate(inst.sigmas):
        center = round_center(lp.p[i], L) if mode == "pruned" else None
        filters.append(trace_filter(sigma, L, eps, alphabet, center=center, radius=radius, budget=budget))
    report["filter_sizes"] = [int(len(u)) for u in filters]
    seq = dp_solve(filters, report)
    if seq is None:
        return trivial("dp-reject")
    report["edge_residuals"] = [
        float(residual_trace_norms(s, N.reshape(1, -1), L, alphabet)[0]) for s, N in zip(inst.sigmas, seq)
    ]
    shadow = stitch_global_shadow(seq, alphabet, L)
    obs = pair_observables(inst.n, width, d_shadow)
    result = instance_from_shadow(shadow, obs, K=1, chi=chi, alpha=alpha, beta=beta)
    report["outcome"] = "shadow"
    report["observables"] = len(obs)
    report["seconds"] = time.perf_counter() - t0
    return ReductionResult(result, False, shadow, seq, report)
