from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowcheck.decider import NO, YES, decide, min_max_violation
from shadowcheck.errors import InvalidInputError
from shadowcheck.fixtures import CLDM_RESTRICTION, cldm_infeasible, cldm_yes
from shadowcheck.linalg import random_density
from shadowcheck.reduction.alphabet import enumerate_alphabet
from shadowcheck.reduction.dp import (
    domain_size,
    dp_solve,
    enumerate_domain,
    exhaustive_sequences,
    marginal_match,
    pruned_domain,
    residual_trace_norms,
    trace_filter,
)
from shadowcheck.reduction.pipeline import (
    CldmInstance,
    pair_observables,
    reduce,
    reduced_thresholds,
    round_center,
    solve_marginal_lp,
    trivial_no_instance,
)
from shadowcheck.reduction.ratlp import feasible_point
from shadowcheck.reduction.stitch import (
    edge_marginal,
    expand_pairs,
    stitch_global_shadow,
    stitch_labels,
    stitching_identity_holds,
    weights_marginal,
)

ZALPHA = enumerate_alphabet(ell=1, restriction=["Z"])
RESTRICTED = enumerate_alphabet(ell=1, restriction=CLDM_RESTRICTION)


def _mixture(N, alphabet):
    return weights_marginal(np.asarray(N), alphabet)


# ---------------------------------------------------------------- alphabet


def test_alphabet_examples():
    full = enumerate_alphabet(ell=1)
    assert full.m == 6
    np.testing.assert_allclose(np.trace(full.mats, axis1=1, axis2=2), 1)
    np.testing.assert_allclose(ZALPHA.mats, [np.diag([2, -1]), np.diag([-1, 2])])
    q = enumerate_alphabet(d=3)
    assert q.m == 12
    np.testing.assert_allclose(q.mats.mean(axis=0), np.eye(3) / 3, atol=1e-12)
    assert enumerate_alphabet(ell=2).m == 36


def test_alphabet_exact_matches_float():
    a = enumerate_alphabet(ell=2, restriction=["X", "Y"])
    for j in range(a.m):
        re, im = a.exact(j)
        np.testing.assert_allclose(np.array(re, dtype=float) + 1j * np.array(im, dtype=float), a.mats[j], atol=1e-15)


def test_alphabet_errors():
    with pytest.raises(InvalidInputError):
        enumerate_alphabet(ell=1, restriction=["W"])
    with pytest.raises(InvalidInputError):
        enumerate_alphabet(ell=1, restriction=["Z", "Z+"])
    with pytest.raises(InvalidInputError):
        enumerate_alphabet(d=4)
    with pytest.raises(InvalidInputError):
        enumerate_alphabet(ell=1, d=3)


# ---------------------------------------------------------------- exact LP


def test_rational_lp_small():
    # x0 + x1 = 1, x0 - x1 <= -1/2  ->  x1 >= 3/4
    x = feasible_point([{0: 1, 1: 1}], [1], [{0: 1, 1: -1}], [Fraction(-1, 2)], 2)
    assert sum(x) == 1 and x[0] - x[1] <= Fraction(-1, 2) and min(x) >= 0
    assert all(isinstance(v, Fraction) for v in x)
    assert feasible_point([{0: 1}], [1], [{0: 1}], [Fraction(1, 2)], 1) is None


def test_lp_maximally_mixed_feasible():
    inst = CldmInstance(2, 3, [np.eye(4) / 4] * 2, 0.1, 1.0)
    sol = solve_marginal_lp(inst, enumerate_alphabet(ell=1))
    assert sol is not None and sol.max_residual <= np.sqrt(2) * 1e-7 + 1e-12
    for p in sol.p:
        assert sum(p.ravel()) == 1 and min(p.ravel()) >= 0
    assert marginal_match(np.array(sol.p[0], dtype=object), np.array(sol.p[1], dtype=object))


def test_lp_recovers_forward_mixture():
    rho = random_density(4, np.random.default_rng(0))
    full = enumerate_alphabet(ell=1)
    proj = (full.mats + np.eye(2)) / 3  # snapshot 3P - I back to the projector P
    q = np.array([[np.trace(np.kron(a, b) @ rho).real / 9 for b in proj] for a in proj])
    np.testing.assert_allclose(_mixture(q, full), rho, atol=1e-12)
    sol = solve_marginal_lp(CldmInstance(2, 2, [rho], 0.1, 1.0), full)
    assert sol is not None and sol.max_residual <= np.sqrt(2) * 1e-7 + 1e-12


def test_lp_infeasible_marginals():
    inst, _ = cldm_infeasible()
    assert solve_marginal_lp(inst, ZALPHA) is None


# ---------------------------------------------------------------- domain and filter


@pytest.mark.parametrize("m", [1, 2, 3])
def test_domain_size_balls_and_bars(m):
    for L in range(0, 11):
        dom = enumerate_domain(L, m)
        assert len(dom) == domain_size(L, m) == comb(L + m * m - 1, m * m - 1)
        assert np.all(dom.sum(axis=1) == L)


def test_pruned_domain_stays_on_support():
    center = np.array([3, 0, 2, 1])
    dom = pruned_domain(center, 6, radius=1)
    assert np.all(dom.sum(axis=1) == 6) and np.all(dom >= 0)
    assert np.all(dom[:, 1] == 0)
    assert any(np.array_equal(row, center) for row in dom)


def test_filter_vacuous_for_large_eps():
    sigma = np.eye(4) / 4
    dom = enumerate_domain(4, 2)
    bound = 1 + max(np.sum(np.abs(np.linalg.eigvalsh(np.kron(a, b)))) for a in ZALPHA.mats for b in ZALPHA.mats)
    assert len(trace_filter(sigma, 4, bound, ZALPHA)) == len(dom)


def _exact_sigma(N, alphabet):
    from shadowcheck.reduction.stitch import exact_weights_marginal

    return exact_weights_marginal(np.asarray(N).reshape(alphabet.m, alphabet.m), alphabet)


def test_filter_at_zero_eps_finds_exact_representations():
    rng = np.random.default_rng(1)
    for L in range(1, 7):
        dom = enumerate_domain(L, 2)
        N0 = dom[rng.integers(len(dom))]
        sigma = _mixture(N0.reshape(2, 2), ZALPHA)
        target = _exact_sigma(N0, ZALPHA)
        exact = {tuple(row) for row in dom
                 if all(np.array_equal(a, b) for a, b in zip(_exact_sigma(row, ZALPHA), target))}
        got = {tuple(row) for row in trace_filter(sigma, L, 1e-9, ZALPHA)}
        assert got == exact and tuple(N0) in got


def test_filter_empty_below_best_residual():
    sigma = np.kron(np.diag([0.7, 0.3]), np.eye(2) / 2)
    norms = residual_trace_norms(sigma, enumerate_domain(3, 2), 3, ZALPHA)
    assert len(trace_filter(sigma, 3, norms.min() * 0.99, ZALPHA)) == 0
    assert len(trace_filter(sigma, 3, norms.min() * 1.01, ZALPHA)) >= 1


def test_filter_shortcut_agrees_with_full_eigenvalues():
    rng = np.random.default_rng(2)
    sigma = _mixture(rng.multinomial(5, np.ones(9) / 9).reshape(3, 3), RESTRICTED)
    dom = enumerate_domain(5, 3)
    full = residual_trace_norms(sigma, dom, 5, RESTRICTED)
    for eps in (0.05, 0.5, 2.0):
        fast = residual_trace_norms(sigma, dom, 5, RESTRICTED, eps=eps)
        assert np.array_equal(fast <= eps, full <= eps)


# ---------------------------------------------------------------- marginal match and DP


def test_marginal_match_examples():
    u = np.ones((2, 2), dtype=int)
    assert marginal_match(u, u)
    assert not marginal_match(np.eye(2, dtype=int), np.array([[1, 1], [0, 0]]))
    with pytest.raises(InvalidInputError):
        marginal_match(np.eye(2), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_marginal_match_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 3, (3, 3)), rng.integers(0, 3, (3, 3))
    naive = all(sum(a[j][k] for j in range(3)) == sum(b[k][j] for j in range(3)) for k in range(3))
    assert marginal_match(a, b) == naive


def test_dp_single_edge_and_forced_chain():
    dom = enumerate_domain(2, 2)
    seq = dp_solve([dom[3:7]])
    assert len(seq) == 1 and np.array_equal(seq[0].ravel(), dom[3])
    chain = [np.array([[1, 1], [0, 0]]), np.array([[1, 0], [0, 1]]), np.array([[0, 1], [1, 0]])]
    out = dp_solve([c.reshape(1, -1) for c in chain])
    assert all(np.array_equal(a, b) for a, b in zip(out, chain))
    assert dp_solve([chain[0].reshape(1, -1), np.array([[2, 0, 0, 0]])]) is None
    with pytest.raises(InvalidInputError):
        dp_solve([])


def test_dp_matches_exhaustive_small():
    rng = np.random.default_rng(3)
    dom = enumerate_domain(3, 2)
    for _ in range(50):
        filters = [dom[rng.choice(len(dom), int(rng.integers(1, 6)), replace=False)] for _ in range(2)]
        seq = dp_solve(filters)
        assert (seq is None) == (not exhaustive_sequences(filters))


def test_dp_reports_frontier_sizes():
    dom = enumerate_domain(2, 2)
    report = {}
    dp_solve([dom, dom, dom], report)
    assert report["frontier_sizes"][0] == len(dom) and len(report["frontier_sizes"]) == 3


# ---------------------------------------------------------------- stitching


def test_single_edge_stitch_is_multiset_expansion():
    N = np.array([[2, 0, 1], [0, 1, 0], [1, 0, 0]])
    labels = stitch_labels([N])
    left, right = expand_pairs(N)
    assert labels.tolist() == np.stack([left, right], axis=1).tolist()
    shadow = stitch_global_shadow([N], RESTRICTED, 5)
    assert shadow.L == 5 and shadow.n == 2


def test_forced_chain_stitch_exact():
    seq = [np.array([[1, 1, 0], [0, 0, 0], [0, 0, 1]]), np.array([[1, 0, 0], [0, 0, 1], [0, 0, 1]])]
    shadow = stitch_global_shadow(seq, RESTRICTED)
    assert stitching_identity_holds(shadow, seq, RESTRICTED, exact=True)
    assert stitching_identity_holds(shadow, seq, RESTRICTED, exact=False)
    labels = np.array(shadow.meta["site_labels"])
    for i, N in enumerate(seq):
        np.testing.assert_allclose(edge_marginal(labels, i, RESTRICTED), weights_marginal(N, RESTRICTED), atol=1e-12)


def test_stitch_rejects_mismatched_sequence():
    with pytest.raises(InvalidInputError):
        stitch_labels([np.array([[2, 0], [0, 0]]), np.array([[0, 0], [0, 2]])])


def test_stitch_qudit_float_identity():
    alpha = enumerate_alphabet(d=3, restriction=[(3, 0), (0, 1), (1, 2)])
    rng = np.random.default_rng(4)
    N1 = rng.multinomial(12, np.ones(9) / 9).reshape(3, 3)
    cols = N1.sum(axis=0)
    N2 = np.array([rng.multinomial(c, np.ones(3) / 3) for c in cols])
    seq = [N1, N2]
    shadow = stitch_global_shadow(seq, alpha, 12)
    assert stitching_identity_holds(shadow, seq, alpha, exact=False)


# ---------------------------------------------------------------- end to end


def test_round_center_sums_to_L():
    p = np.array([[Fraction(1, 3), Fraction(1, 3)], [Fraction(1, 3), 0]], dtype=object)
    c = round_center(p, 10)
    assert c.sum() == 10 and np.all(c >= 0)


def test_pair_observables_counts():
    obs = pair_observables(3, 1)
    assert len(obs) == 2 * 15 - 3  # the shared-site single-qubit strings appear once
    assert len({p.letters for p in obs}) == len(obs)


def test_trivial_no_instance_optimum_is_one():
    inst = trivial_no_instance(3, 2, 0.1, 0.3)
    chi, _ = min_max_violation(inst)
    assert chi == pytest.approx(1)
    q = trivial_no_instance(2, 3, 0.1, 0.3)
    assert min_max_violation(q)[0] == pytest.approx(1)


def test_reduced_thresholds():
    inst = CldmInstance(2, 2, [np.eye(4) / 4], 0.0, 1.9)
    a, b = reduced_thresholds(inst, 0.05, 30)
    assert a == pytest.approx(0.05 + 2**-30)
    assert b == pytest.approx((1.9 - 0.05) / 16 - 0.05 - 2**-30)


def test_reduce_yes_fixture():
    inst, info = cldm_yes(3)
    res = reduce(inst, info["L"], eps=info["eps"], alphabet=RESTRICTED)
    assert not res.trivial
    assert res.report["outcome"] == "shadow" and res.report["frontier_sizes"][-1] >= 1
    assert stitching_identity_holds(res.shadow, res.sequence, RESTRICTED)
    assert decide(res.instance).verdict == YES


def test_reduce_infeasible_fixture():
    inst, info = cldm_infeasible()
    res = reduce(inst, info["L"], eps=info["eps"], alphabet=RESTRICTED)
    assert res.trivial and res.report["outcome"] == "lp-infeasible"
    assert decide(res.instance).verdict == NO


def test_reduce_uniform_two_sites():
    inst = CldmInstance(2, 2, [np.eye(4) / 4], 0.0, 1.9)
    res = reduce(inst, 4, eps=0.05, alphabet=ZALPHA)
    assert not res.trivial
    assert np.array_equal(res.sequence[0], np.ones((2, 2), dtype=int))
    pairs = {tuple(r) for r in res.shadow.meta["site_labels"]}
    assert pairs == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_reduce_pruned_mode_matches_full():
    inst, info = cldm_yes(5)
    full = reduce(inst, info["L"], eps=info["eps"], alphabet=RESTRICTED, mode="full")
    pruned = reduce(inst, info["L"], eps=info["eps"], alphabet=RESTRICTED, mode="pruned")
    assert not full.trivial and not pruned.trivial
    assert pruned.report["mode"] == "pruned"


def test_reduce_rejects_empty_gap():
    inst = CldmInstance(2, 2, [np.eye(4) / 4], 0.5, 0.6)
    with pytest.raises(InvalidInputError):
        reduce(inst, 4, alphabet=ZALPHA)


def test_cldm_json_roundtrip():
    inst, _ = cldm_yes(0)
    back = CldmInstance.from_json(inst.to_json())
    assert back.n == inst.n
    np.testing.assert_allclose(back.sigmas[0], inst.sigmas[0])
    with pytest.raises(InvalidInputError):
        CldmInstance.from_json({"d": 2})
