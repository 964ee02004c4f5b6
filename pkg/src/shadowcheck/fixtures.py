"""Reproducible fixture instances."""
import numpy as np

from .decider import ObsConInstance
from .errors import InvalidInputError
from .pauli import PauliString
from .reduction.alphabet import enumerate_alphabet
from .reduction.pipeline import CldmInstance
from .rng import stream

CLDM_RESTRICTION = ("Z+", "Z-", "X+")
CLDM_L = 20
CLDM_EPS = 0.05
# site snapshot counts out of L over (Z+, Z-, X+); every mixture here is a valid state
_TYPE_A = ((8, 8, 4), (6, 10, 4), (10, 6, 4), (8, 6, 6))
_TYPE_B = (10, 10, 0)


def _site_state(counts, alphabet):
    q = np.asarray(counts, dtype=float) / CLDM_L
    return np.tensordot(q, alphabet.mats, axes=1)


def cldm_yes(seed=0, n=4):
    """Product-state chain marginals that are exactly representable at ``L = 20``.

    Sites alternate between a uniform Z mixture and a seed-chosen mixture with
    an X component.  No two X-carrying sites are adjacent, so every pair
    weight ``a_j b_k / 20`` is an integer and a zero-residual weight sequence
    exists.
    """
    rng = stream(seed, "fixture/cldm-yes")
    alphabet = enumerate_alphabet(ell=1, restriction=CLDM_RESTRICTION)
    start = int(rng.integers(0, 2))
    counts = []
    for s in range(n):
        if (s + start) % 2 == 0:
            counts.append(_TYPE_A[int(rng.integers(0, len(_TYPE_A)))])
        else:
            counts.append(_TYPE_B)
    states = [_site_state(c, alphabet) for c in counts]
    sigmas = [np.kron(states[i], states[i + 1]) for i in range(n - 1)]
    inst = CldmInstance(2, n, sigmas, 0.0, 1.9)
    return inst, {"site_counts": [list(c) for c in counts], "restriction": list(CLDM_RESTRICTION), "L": CLDM_L, "eps": CLDM_EPS}


def cldm_infeasible():
    """``sigma_12 = |00><00|`` next to ``sigma_23 = |11><11|``: site 2 cannot be both."""
    s00 = np.zeros((4, 4), dtype=np.complex128)
    s00[0, 0] = 1
    s11 = np.zeros((4, 4), dtype=np.complex128)
    s11[3, 3] = 1
    inst = CldmInstance(2, 3, [s00, s11], 0.0, 1.9)
    return inst, {"restriction": list(CLDM_RESTRICTION), "L": CLDM_L, "eps": CLDM_EPS}


def obscon_xyz():
    """``{(X, 1), (Y, 1), (Z, 1)}``; the optimum is ``1 - 1/sqrt(3)``."""
    return ObsConInstance(1, [PauliString("X"), PauliString("Y"), PauliString("Z")], [1.0, 1.0, 1.0], 0.1, 0.3)


def obscon_contradiction():
    """``{(Z, 1), (-Z, 1)}``; the optimum is exactly 1."""
    return ObsConInstance(1, [PauliString("Z"), PauliString.from_str("-Z")], [1.0, 1.0], 0.1, 0.3)


def lowrank_observables(N, count, rank, rng, fro_max=8.0):
    """Random Hermitian rank-``rank`` observables with operator norm 1 and ``||O||_F <= fro_max``.

    Each is returned in factorized form ``(lambdas, W)`` with orthonormal
    columns ``W``.
    """
    out = []
    for _ in range(count):
        g = rng.standard_normal((N, rank)) + 1j * rng.standard_normal((N, rank))
        w, _ = np.linalg.qr(g)
        lam = rng.uniform(0.3, 1.0, rank) * rng.choice([-1.0, 1.0], rank)
        lam[int(rng.integers(0, rank))] = np.sign(lam[0]) or 1.0
        lam /= np.max(np.abs(lam))
        fro = np.sqrt(np.sum(lam**2))
        if fro > fro_max:
            lam *= fro_max / fro
        out.append((lam, w))
    return out


def planted_targets(obs, rng, yes=True, push=0.8):
    """Targets from a planted pure state in the span of the observables.

    NO instances shift every target by ``+-push`` away from the planted value
    (toward the inside of ``[-1, 1]``), then clip to ``[-1, 1]``.
    """
    vecs = np.hstack([w for _, w in obs])
    coef = rng.standard_normal(vecs.shape[1]) + 1j * rng.standard_normal(vecs.shape[1])
    psi = vecs @ coef
    psi /= np.linalg.norm(psi)
    vals = []
    for lam, w in obs:
        amp = w.conj().T @ psi
        vals.append(float(np.sum(lam * np.abs(amp) ** 2)))
    vals = np.array(vals)
    if not yes:
        vals = np.where(vals > 0, vals - push, vals + push)
    return np.clip(vals, -1, 1), psi


FIXTURE_KINDS = ("cldm-yes", "cldm-infeasible", "obscon-xyz", "obscon-contradiction", "lowrank-obs")


def make_fixture(kind, seed=0):
    """Return ``(object, info)`` for a named fixture."""
    if kind == "cldm-yes":
        return cldm_yes(seed)
    if kind == "cldm-infeasible":
        return cldm_infeasible()
    if kind == "obscon-xyz":
        return obscon_xyz(), {}
    if kind == "obscon-contradiction":
        return obscon_contradiction(), {}
    if kind == "lowrank-obs":
        rng = stream(seed, "fixture/lowrank-obs")
        obs = lowrank_observables(256, 4, 4, rng)
        y, _ = planted_targets(obs, rng, yes=True)
        return (obs, y), {"N": 256, "rank": 4}
    raise InvalidInputError(f"unknown fixture kind {kind!r}; choose from {', '.join(FIXTURE_KINDS)}")
