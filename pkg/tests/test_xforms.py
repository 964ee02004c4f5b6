from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from shadowcheck.decider import brute_force_1q
from shadowcheck.errors import DimensionError, InvalidInputError
from shadowcheck.linalg import partial_trace, random_density, trace_norm
from shadowcheck.pauli import PauliString
from shadowcheck.shadows import sample_local_shadow
from shadowcheck.xforms import (
    BlockInstance,
    CheckTriple,
    bloc_flatten,
    bloc_parameters,
    check_parameters,
    check_to_pair,
    checks_to_obscon,
    cldm_to_obscon,
    coupon_draws,
    exact,
    sampled_to_explicit,
    shadow_assembler,
    shadow_sampler,
)


def test_exact_reads_decimals():
    assert exact(0.1) == Fraction(1, 10)
    assert exact("3/8") == Fraction(3, 8)
    assert exact(np.int64(2)) == 2


# ---------------------------------------------------------------- marginals


def test_cldm_single_qubit_zero_state():
    inst, th = cldm_to_obscon([(0,)], [np.diag([1.0, 0.0])], 0.1, 0.8, 1)
    assert [o.letters for o in inst.observables] == ["I", "X", "Y", "Z"]
    np.testing.assert_allclose(inst.targets, [1, 0, 0, 1], atol=1e-12)
    assert th["beta"] == Fraction(1, 5) and th["alpha"] == Fraction(1, 10)
    assert inst.beta == pytest.approx(0.2)


def test_cldm_counts_and_embedding():
    rng = np.random.default_rng(0)
    rho = random_density(8, rng)
    sets = [(0, 1), (2,)]
    inst, th = cldm_to_obscon(sets, [partial_trace(rho, [2, 2, 2], [0, 1]), partial_trace(rho, [2, 2, 2], [2])],
                              0.0, 1.0, 2)
    assert inst.m == 16 + 4 and th["beta"] == Fraction(1, 16)
    chi = inst.violation(rho)
    assert chi == pytest.approx(0, abs=1e-10)


def test_cldm_errors():
    with pytest.raises(InvalidInputError):
        cldm_to_obscon([(0, 1)], [np.eye(4) / 4], 0.1, 0.8, 1)
    with pytest.raises(DimensionError):
        cldm_to_obscon([(0,)], [np.eye(4) / 4], 0.1, 0.8, 1)
    with pytest.raises(InvalidInputError):
        cldm_to_obscon([(0,), (1,)], [np.eye(2) / 2], 0.1, 0.8, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cldm_completeness_direction(seed):
    # Pauli expectations move by at most the trace norm 2a of the marginal difference
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng)
    sigma = partial_trace(rho, [2, 2], [0])
    noisy = 0.9 * sigma + 0.1 * random_density(2, rng)
    a = trace_norm(sigma - noisy) / 2
    inst, _ = cldm_to_obscon([(0,)], [noisy], a, 1.0, 1, n=2)
    assert inst.violation(rho) <= 2 * a + 1e-12


# ---------------------------------------------------------------- checks


def test_check_parameters_example():
    par = check_parameters(1, 0)
    assert par["tau"] == Fraction(1, 4) and par["s_prime"] == Fraction(1, 4) and par["t"] == 1
    assert par["alpha"] == Fraction(1, 4) and par["beta"] == Fraction(3, 8)
    with pytest.raises(InvalidInputError):
        check_parameters(0, 0)


@settings(max_examples=100, deadline=None)
@given(st.fractions(Fraction(1, 100), 1), st.fractions(0, 1))
def test_check_gap_identity(eps, s):
    par = check_parameters(eps, s)
    assert par["beta"] - par["alpha"] == eps**2 / 8
    assert 0 < par["t"] <= 1


def test_identity_check():
    o, y, alpha, beta = check_to_pair(CheckTriple(np.eye(2), 0.0, 0.5), 0.5)
    t = float(check_parameters(0.5, 0.5)["t"])
    np.testing.assert_allclose(o, t * np.diag([0.0, 1.0]))
    assert y == 0 and beta - alpha == Fraction(1, 32)


def test_random_check_matches_simulation():
    rng = np.random.default_rng(1)
    for _ in range(10):
        v = unitary_group.rvs(4, random_state=rng)
        c = CheckTriple(v, 0.3, 0.2)
        o, _, _, _ = check_to_pair(c, 0.4)
        t = float(check_parameters(0.4, 0.2)["t"])
        assert np.linalg.norm(o, 2) <= t + 1e-12
        for _ in range(3):
            rho = random_density(4, rng)
            psi = v @ rho @ v.conj().T
            pr1 = np.real(psi[2, 2] + psi[3, 3])  # outcome 1 on the most significant qubit
            assert np.real(np.trace(o @ rho)) == pytest.approx(t * pr1, abs=1e-10)


def test_check_errors_and_batch():
    with pytest.raises(InvalidInputError):
        CheckTriple(np.array([[1, 1], [0, 1]]), 0.0, 0.0)
    with pytest.raises(InvalidInputError):
        CheckTriple(np.eye(2), 1.5, 0.0)
    with pytest.raises(DimensionError):
        CheckTriple(np.eye(3), 0.0, 0.0)
    inst, th = checks_to_obscon([CheckTriple(np.eye(2), 0.0, 0.0), CheckTriple(np.eye(2), 1.0, 0.0)], 1)
    assert inst.m == 2 and th["alpha"] == Fraction(1, 4)
    assert brute_force_1q(inst) == pytest.approx(0.5, abs=1e-2)
    with pytest.raises(InvalidInputError):
        checks_to_obscon([], 1)


# ---------------------------------------------------------------- blocks


def test_bloc_example():
    z = PauliString("Z")
    b = BlockInstance(1, [([z], [0.5], 0.1, 0.3), ([z], [0.2], 0.05, 0.25)])
    inst, par = bloc_flatten(b)
    assert par["g"] == Fraction(1, 5) and par["tau"] == Fraction(1, 20)
    assert par["t"] == [Fraction(1, 2), Fraction(1)]
    assert par["alpha"] == Fraction(1, 20) and par["beta"] == Fraction(21, 400)
    assert par["beta"] - par["alpha"] == par["g"] ** 2 / 16
    np.testing.assert_allclose(inst.targets, [0.25, 0.2])
    assert inst.observables[0].coeff == 0.5


def test_single_block_is_rescaling():
    rng = np.random.default_rng(2)
    obs = [PauliString("X"), PauliString("Z")]
    ys = rng.uniform(-1, 1, 2)
    b = BlockInstance(1, [(obs, ys, 0.4, 0.8)])
    inst, par = bloc_flatten(b)
    t = float(par["t"][0])
    assert t == pytest.approx(0.25)
    assert brute_force_1q(inst, grid=50_000) == pytest.approx(t * brute_force_1q(b.block_instance(0), grid=50_000))


@settings(max_examples=50, deadline=None)
@given(st.fractions(0, 1), st.fractions(0, 1), st.fractions(Fraction(1, 100), 1), st.fractions(Fraction(1, 100), 1))
def test_bloc_gap_identity(a1, a2, g1, g2):
    b = BlockInstance(1, [([PauliString("Z")], [0.0], a1, a1 + g1), ([PauliString("X")], [0.0], a2, a2 + g2)])
    par = bloc_parameters(b)
    assert par["beta"] - par["alpha"] == min(g1, g2) ** 2 / 16
    assert all(0 < t <= 1 for t in par["t"])


def test_bloc_errors():
    with pytest.raises(InvalidInputError):
        BlockInstance(1, [])
    with pytest.raises(InvalidInputError):
        BlockInstance(1, [([PauliString("Z")], [0.0], 0.3, 0.2)])
    with pytest.raises(InvalidInputError):
        BlockInstance(1, [([], [], 0.1, 0.3)])


# ---------------------------------------------------------------- coupon collector


def test_coupon_draws():
    assert coupon_draws(10, 0.01) == 70
    assert coupon_draws(1, 0.5) == 1
    with pytest.raises(InvalidInputError):
        coupon_draws(0, 0.1)


def test_single_label_reconstructs():
    out = sampled_to_explicit(lambda rng: (0, "r"), 1, 0.5)
    assert out.complete and out.records == ["r"] and out.draws == 1


def test_round_robin_is_exact():
    state = {"k": 0}

    def sampler(rng):
        j = state["k"] % 10
        state["k"] += 1
        return j, f"rec{j}"

    out = sampled_to_explicit(sampler, 10, 0.01, assemble=list)
    assert out.complete and out.shadow == [f"rec{j}" for j in range(10)]


def test_incomplete_is_flagged():
    out = sampled_to_explicit(lambda rng: (int(rng.integers(0, 3)), None), 5, 0.1, rng=np.random.default_rng(3))
    assert not out.complete and out.missing == 2 and out.shadow is None
    with pytest.raises(InvalidInputError):
        sampled_to_explicit(lambda rng: (7, None), 5, 0.1)


def test_shadow_reconstruction_is_deterministic():
    sh = sample_local_shadow(np.eye(4) / 4, 2, 8, np.random.default_rng(4))
    runs = [sampled_to_explicit(shadow_sampler(sh), sh.L, 0.01, rng=np.random.default_rng(5),
                                assemble=shadow_assembler(sh)) for _ in range(2)]
    assert runs[0].complete and runs[0].records == list(range(8))
    np.testing.assert_array_equal(runs[0].shadow.bases, sh.bases)
    assert runs[0].records == runs[1].records
