"""Instance-to-instance maps between the consistency problems.

Threshold arithmetic is exact: float inputs are read through their shortest
decimal form (``0.1`` means ``1/10``) and every derived threshold is a
``Fraction``, so the gap identities can be checked bit for bit.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import MAX_DIM
from .decider import ObsConInstance
from .errors import DimensionError, InvalidInputError
from .linalg import as_matrix, check_density, check_observable
from .pauli import PauliString, all_pauli_strings, embed
from .rng import as_generator


def exact(x):
    """Rational value of a number; floats go through their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(repr(float(x)))


# ---------------------------------------------------------------- marginals


def cldm_to_obscon(sets, states, alpha, beta, k, n=None):
    """Local density matrices to observable consistency.

    Each set ``C_i`` (0-based qubit indices) contributes all ``4^|C_i|`` Pauli
    strings on ``C_i``, identity included, with targets ``Tr(P rho_i)``.
    Thresholds are ``alpha`` and ``beta / 4^k``.  Returns the instance and the
    exact thresholds.
    """
    if len(sets) != len(states):
        raise InvalidInputError("one state per qubit set is required")
    sets = [tuple(int(q) for q in c) for c in sets]
    if n is None:
        n = max(max(c) for c in sets) + 1
    obs, targets = [], []
    for c, rho in zip(sets, states):
        if len(c) > k:
            raise InvalidInputError(f"set {c} is larger than k = {k}")
        if len(set(c)) != len(c) or min(c) < 0 or max(c) >= n:
            raise InvalidInputError(f"bad qubit set {c}")
        rho = check_density(rho)
        if rho.shape[0] != 2 ** len(c):
            raise DimensionError(f"state for {c} has dimension {rho.shape[0]}")
        for p in all_pauli_strings(len(c), include_identity=True):
            obs.append(embed(p, n, list(c)))
            targets.append(float(np.real(np.trace(p.to_matrix() @ rho))))
    a = exact(alpha)
    b = exact(beta) / 4**k
    return ObsConInstance(n, obs, np.clip(targets, -1, 1), float(a), float(b)), {"alpha": a, "beta": b}


# ---------------------------------------------------------------- checks


@dataclass
class CheckTriple:
    """A check ``(V, r, s)``; acceptance is outcome 1 on qubit ``out`` (0 = most significant)."""

    V: np.ndarray
    r: float
    s: float
    out: int = 0

    def __post_init__(self):
        v = as_matrix(self.V)
        if v.shape[0] > MAX_DIM:
            raise DimensionError(f"dimension {v.shape[0]} exceeds {MAX_DIM}")
        nq = int(round(math.log2(v.shape[0])))
        if 2**nq != v.shape[0]:
            raise DimensionError("V must act on whole qubits")
        if not np.allclose(v.conj().T @ v, np.eye(v.shape[0]), atol=1e-8):
            raise InvalidInputError("V is not unitary")
        if not (0 <= float(self.r) <= 1 and 0 <= float(self.s) <= 1):
            raise InvalidInputError("r and s must lie in [0, 1]")
        if not 0 <= self.out < nq:
            raise InvalidInputError("output qubit out of range")
        self.V = v

    @property
    def n(self):
        return int(round(math.log2(self.V.shape[0])))

    def accept_projector(self):
        n = self.n
        one = np.diag([0.0, 1.0])
        return np.kron(np.kron(np.eye(2**self.out), one), np.eye(2 ** (n - self.out - 1)))

    def accept_probability(self, rho):
        v = self.V
        out = v @ as_matrix(rho) @ v.conj().T
        return float(np.real(np.trace(self.accept_projector() @ out)))


def check_parameters(eps, s):
    """Exact ``eps' = eps/2, tau = eps/4, s' = max(s, tau), t = tau/s'`` and thresholds."""
    e = exact(eps)
    if not 0 < e <= 1:
        raise InvalidInputError("need 0 < eps <= 1")
    tau = e / 4
    sp = max(exact(s), tau)
    t = tau / sp
    return {"eps_prime": e / 2, "tau": tau, "s_prime": sp, "t": t, "alpha": tau, "beta": tau + tau * e / 2}


def check_to_pair(check, eps):
    """``(O, y, alpha, beta)`` with ``O = t V^dagger Pi V`` and ``y = t r``; thresholds exact."""
    par = check_parameters(eps, check.s)
    t = par["t"]
    o = float(t) * (check.V.conj().T @ check.accept_projector() @ check.V)
    o = (o + o.conj().T) / 2
    y = t * exact(check.r)
    return o, y, par["alpha"], par["beta"]


def checks_to_obscon(checks, eps):
    """All checks under one gap parameter, as a single instance (uniform thresholds)."""
    if not checks:
        raise InvalidInputError("no checks")
    n = checks[0].n
    obs, ys = [], []
    alpha = beta = None
    for c in checks:
        if c.n != n:
            raise DimensionError("checks act on different numbers of qubits")
        o, y, alpha, beta = check_to_pair(c, eps)
        obs.append(o)
        ys.append(float(y))
    return ObsConInstance(n, obs, ys, float(alpha), float(beta)), {"alpha": alpha, "beta": beta}


# ---------------------------------------------------------------- blocks


@dataclass
class BlockInstance:
    """Blocks of ``(observables, targets, alpha_k, beta_k)`` on ``n`` qubits."""

    n: int
    blocks: list = field(default_factory=list)

    def __post_init__(self):
        if not self.blocks:
            raise InvalidInputError("empty block instance")
        clean = []
        for obs, ys, a, b in self.blocks:
            if len(obs) == 0 or len(obs) != len(ys):
                raise InvalidInputError("every block needs matching nonempty observables and targets")
            a, b = exact(a), exact(b)
            if not (0 <= a < b <= 2):
                raise InvalidInputError(f"block thresholds need 0 <= alpha < beta <= 2, got {a}, {b}")
            clean.append((list(obs), [float(y) for y in ys], a, b))
        self.blocks = clean

    def block_instance(self, k):
        obs, ys, a, b = self.blocks[k]
        return ObsConInstance(self.n, obs, ys, float(a), float(b))


def bloc_parameters(b):
    """Exact ``g, tau, alpha'_k, t_k`` and the flattened thresholds."""
    g = min(bk - ak for _, _, ak, bk in b.blocks)
    tau = g / 4
    alpha_p = [max(ak, tau) for _, _, ak, _ in b.blocks]
    t = [tau / a for a in alpha_p]
    return {"g": g, "tau": tau, "alpha_prime": alpha_p, "t": t, "alpha": tau, "beta": tau + tau * g / 4}


def _scale(o, t):
    if isinstance(o, PauliString):
        return o.scaled(t)
    return t * check_observable(o)


def bloc_flatten(b):
    """One instance holding every block, rescaled by ``t_k``, in block-major order."""
    par = bloc_parameters(b)
    obs, ys = [], []
    for (bo, by, _, _), t in zip(b.blocks, par["t"]):
        for o, y in zip(bo, by):
            obs.append(_scale(o, float(t)))
            ys.append(float(t) * y)
    return ObsConInstance(b.n, obs, ys, float(par["alpha"]), float(par["beta"])), par


# ---------------------------------------------------------------- sampling


def coupon_draws(L, delta):
    """``ceil(L (ln L + ln(1/delta)))`` draws see every label with probability >= 1 - delta."""
    if L < 1 or not 0 < delta < 1:
        raise InvalidInputError("need L >= 1 and 0 < delta < 1")
    return max(1, math.ceil(L * (math.log(L) + math.log(1 / delta))))


@dataclass
class Reconstruction:
    complete: bool
    missing: int
    draws: int
    records: list
    shadow: object = None


def sampled_to_explicit(sampler, L, delta, rng=None, assemble=None):
    """Rebuild an explicit record list from a labelled sampler.

    ``sampler(rng)`` returns ``(label, record)`` with ``label`` in ``range(L)``.
    The first record seen for each label is kept.  When every label appears,
    ``assemble`` (if given) turns the label-ordered records into the result
    ``shadow``; otherwise the result is flagged incomplete with the number of
    missing labels.
    """
    rng = as_generator(rng)
    draws = coupon_draws(L, delta)
    seen = {}
    for _ in range(draws):
        label, rec = sampler(rng)
        label = int(label)
        if not 0 <= label < L:
            raise InvalidInputError(f"label {label} outside [0, {L})")
        seen.setdefault(label, rec)
    missing = L - len(seen)
    records = [seen[j] for j in range(L)] if missing == 0 else [seen[j] for j in sorted(seen)]
    out = Reconstruction(missing == 0, missing, draws, records)
    if out.complete and assemble is not None:
        out.shadow = assemble(records)
    return out


def shadow_sampler(shadow):
    """Uniform labelled sampler over a shadow's records; records are their indices."""
    def draw(rng):
        j = int(rng.integers(0, shadow.L))
        return j, j
    return draw


def shadow_assembler(shadow):
    return lambda idx: shadow.subset(np.asarray(idx, dtype=np.int64))
