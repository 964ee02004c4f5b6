"""Acceptance suite: twelve end-to-end criteria at their stated tolerances.

Each test records one pass/fail line (printed in the terminal summary) and
then asserts, so a failing criterion is visible both ways.
"""
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm as scipy_expm

from shadowcheck.clifford import enumerate_symplectic, stabilizer_bases, stabilizer_states
from shadowcheck.decider import NO, YES, ObsConInstance, brute_force_1q, decide, min_max_violation
from shadowcheck.dequant.estimators import estimate_bilinear, estimate_inner
from shadowcheck.dequant.fkv import fkv_sketch
from shadowcheck.dequant.pipeline import dequantized_decide
from shadowcheck.dequant.sq import SqMatrix, SqVector
from shadowcheck.fixtures import CLDM_RESTRICTION, cldm_infeasible, cldm_yes, lowrank_observables, obscon_xyz, planted_targets
from shadowcheck.linalg import partial_trace, random_density, random_hermitian, random_pure, trace_norm
from shadowcheck.pauli import low_weight_paulis
from shadowcheck.reduction.alphabet import enumerate_alphabet
from shadowcheck.reduction.dp import dp_solve, enumerate_domain, exhaustive_sequences, marginal_match
from shadowcheck.reduction.pipeline import reduce
from shadowcheck.reduction.stitch import stitch_global_shadow, stitching_identity_holds
from shadowcheck.rng import stream
from shadowcheck.shadows import (
    QUBIT_SNAPSHOTS,
    _single_snapshots,
    exact_local_distribution,
    mom_recover,
    qudit_eigvecs,
    sample_global_shadow,
    sample_local_shadow,
    sample_myz_shadow,
)
from shadowcheck.xforms import (
    BlockInstance,
    CheckTriple,
    bloc_flatten,
    check_parameters,
    checks_to_obscon,
    cldm_to_obscon,
    coupon_draws,
    sampled_to_explicit,
)

pytestmark = pytest.mark.acceptance


def _batched_kron(a, b):
    n = a.shape[0]
    return np.einsum("lab,lcd->lacbd", a, b).reshape(n, a.shape[1] * b.shape[1], a.shape[2] * b.shape[2])


def _local_snapshots(bases, outcomes, table):
    out = table[bases[:, 0], outcomes[:, 0]]
    for s in range(1, bases.shape[1]):
        out = _batched_kron(out, table[bases[:, s], outcomes[:, s]])
    return out


def _global_expectation(rho, n):
    """Exact average snapshot over every Clifford (symplectic part times all sign vectors)."""
    mats = enumerate_symplectic(n)
    signs = (np.arange(4**n)[:, None] >> np.arange(2 * n)) & 1
    x = np.repeat(mats[:, :, :n], len(signs), axis=0)
    z = np.repeat(mats[:, :, n:], len(signs), axis=0)
    r = np.tile(signs, (len(mats), 1)).astype(np.uint8)
    cols = stabilizer_bases(x, z, r)
    dim = 2**n
    probs = np.real(np.einsum("bji,jk,bki->bi", cols.conj(), rho, cols))
    proj = np.einsum("bi,bji,bki->jk", probs, cols, cols.conj()) / len(cols)
    return (dim + 1) * proj - np.eye(dim)


def test_c01_exact_unbiasedness(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    qudit_table = _single_snapshots(qudit_eigvecs(3), 4)
    for n in (1, 2):
        rho = random_density(2**n, rng)
        b, o, w = exact_local_distribution(rho, n)
        mean = np.einsum("l,lij->ij", w, _local_snapshots(b, o, QUBIT_SNAPSHOTS))
        worst = max(worst, np.max(np.abs(mean - rho)))
        worst = max(worst, np.max(np.abs(_global_expectation(rho, n) - rho)))
        rho3 = random_density(3**n, rng)
        b, o, w = exact_local_distribution(rho3, n, d=3)
        mean = np.einsum("l,lij->ij", w, _local_snapshots(b, o, qudit_table))
        worst = max(worst, np.max(np.abs(mean - rho3)))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-10 and secs < 5
    criterion(1, ok, f"max entry error {worst:.2e} (<= 1e-10), {secs:.2f} s (< 5 s)")
    assert ok


def test_c02_snapshot_normalization(criterion):
    rng = np.random.default_rng(2)
    per = 33_334
    traces = []
    rho = random_density(4, rng)
    sh = sample_local_shadow(rho, 2, per, rng)
    traces.append(np.trace(_local_snapshots(sh.bases, sh.outcomes, QUBIT_SNAPSHOTS), axis1=1, axis2=2))
    sh = sample_global_shadow(rho, 2, per, rng)
    psi = stabilizer_states(sh.tab_x, sh.tab_z, sh.tab_r, sh.outcomes)
    snaps = 5 * np.einsum("li,lj->lij", psi, psi.conj()) - np.eye(4)
    traces.append(np.trace(snaps, axis1=1, axis2=2))
    rho3 = random_density(9, rng)
    sh = sample_myz_shadow(rho3, 2, 3, per, rng)
    table = _single_snapshots(qudit_eigvecs(3), 4)
    traces.append(np.trace(_local_snapshots(sh.bases, sh.outcomes, table), axis1=1, axis2=2))
    traces = np.concatenate(traces)
    worst = float(np.max(np.abs(traces - 1)))
    ok = worst <= 1e-10 and traces.size >= 100_000
    criterion(2, ok, f"{traces.size} snapshots, max |Tr - 1| = {worst:.2e} (<= 1e-10)")
    assert ok


def test_c03_statistical_recovery(criterion):
    t0 = time.perf_counter()
    paulis = low_weight_paulis(3, 2)
    good = 0
    worst = 0.0
    for seed in range(20):
        rng = stream(seed, "acceptance/recovery")
        psi = random_pure(8, rng)
        rho = np.outer(psi, psi.conj())
        sh = sample_local_shadow(rho, 3, 60_000, rng)
        errs = [abs(mom_recover(sh, p, K=10) - np.real(np.trace(p.to_matrix() @ rho))) for p in paulis]
        worst = max(worst, max(errs))
        good += max(errs) <= 0.05
    secs = time.perf_counter() - t0
    ok = good >= 19 and secs < 60
    criterion(3, ok, f"{good}/20 seeds with all {len(paulis)} estimates within 0.05 (need 19), worst {worst:.3f}, {secs:.1f} s")
    assert ok


def test_c04_global_channel(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    rho = random_density(4, rng)
    sh = sample_global_shadow(rho, 2, 200_000, rng)
    acc = np.zeros((4, 4), dtype=np.complex128)
    for lo in range(0, sh.L, 50_000):
        sl = slice(lo, lo + 50_000)
        psi = stabilizer_states(sh.tab_x[sl], sh.tab_z[sl], sh.tab_r[sl], sh.outcomes[sl])
        acc += np.einsum("li,lj->ij", psi, psi.conj())
    est = acc / sh.L
    err = float(np.max(np.abs(est - (rho + np.eye(4)) / 5)))
    secs = time.perf_counter() - t0
    ok = err <= 0.01 and secs < 60
    criterion(4, ok, f"max entry error {err:.4f} (<= 0.01), {secs:.1f} s")
    assert ok


def _random_1q_observable(rng):
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    h = (h + h.conj().T) / 2
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


def test_c05_decider_oracle(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 6))
        obs = [_random_1q_observable(rng) for _ in range(m)]
        inst = ObsConInstance(1, obs, rng.uniform(-1, 1, m), 0.1, 0.3)
        chi, _ = min_max_violation(inst, tol=1e-5)
        worst = max(worst, abs(chi - brute_force_1q(inst)))
    xyz, _ = min_max_violation(obscon_xyz(), tol=1e-6)
    xyz_err = abs(xyz - (1 - 1 / np.sqrt(3)))
    secs = time.perf_counter() - t0
    ok = worst <= 2e-3 and xyz_err <= 1e-3 and secs < 120
    criterion(5, ok, f"max |solver - grid| {worst:.2e} (<= 2e-3), XYZ error {xyz_err:.1e} (<= 1e-3), {secs:.1f} s")
    assert ok


def _successor(N, m, rng):
    """A random weight matrix whose row sums equal the column sums of ``N``."""
    cols = N.reshape(m, m).sum(axis=0)
    return np.array([rng.multinomial(c, rng.dirichlet(np.ones(m))) for c in cols]).ravel()


def _random_filters(m, edges, L, rng):
    dom = np.asarray(enumerate_domain(L, m))
    filters = []
    for _ in range(edges):
        size = int(rng.integers(1, min(len(dom), 6) + 1))
        filters.append(dom[rng.choice(len(dom), size, replace=False)])
    if rng.random() < 0.5:
        chain = [dom[rng.integers(len(dom))]]
        for _ in range(edges - 1):
            chain.append(_successor(chain[-1], m, rng))
        filters = [np.unique(np.vstack([u, c[None]]), axis=0) for u, c in zip(filters, chain)]
        filters = [u[rng.permutation(len(u))] for u in filters]
    return filters


def test_c06_dp_correctness(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    total = agree = accepts = 0
    for m in (1, 2, 3):
        for n in (2, 3, 4):
            for L in range(1, 7):
                for _ in range(50):
                    filters = _random_filters(m, n - 1, L, rng)
                    seq = dp_solve(filters)
                    truth = exhaustive_sequences(filters)
                    if seq is None:
                        good = not truth
                    else:
                        member = all(any(np.array_equal(N.ravel(), row) for row in u) for N, u in zip(seq, filters))
                        chained = all(marginal_match(seq[i], seq[i + 1]) for i in range(len(seq) - 1))
                        good = bool(truth) and member and chained
                        accepts += 1
                    agree += good
                    total += 1
    secs = time.perf_counter() - t0
    ok = agree == total and secs < 120
    criterion(6, ok, f"{agree}/{total} configurations agree with exhaustive enumeration ({accepts} accepts), {secs:.1f} s")
    assert ok


def test_c07_stitching_identity(criterion):
    rng = np.random.default_rng(7)
    alphabet = enumerate_alphabet(ell=1, restriction=CLDM_RESTRICTION)
    held = 0
    for _ in range(20):
        seq = [rng.multinomial(12, rng.dirichlet(np.ones(9)))]
        for _ in range(2):
            seq.append(_successor(seq[-1], 3, rng))
        seq = [N.reshape(3, 3) for N in seq]
        shadow = stitch_global_shadow(seq, alphabet, 12)
        held += stitching_identity_holds(shadow, seq, alphabet, exact=True)
    ok = held == 20
    criterion(7, ok, f"{held}/20 stitched shadows satisfy the exact per-edge identity")
    assert ok


def test_c08_end_to_end_reduction(criterion):
    t0 = time.perf_counter()
    yes = 0
    for seed in range(10):
        inst, info = cldm_yes(seed)
        alphabet = enumerate_alphabet(ell=1, restriction=info["restriction"])
        res = reduce(inst, info["L"], eps=info["eps"], alphabet=alphabet)
        yes += (not res.trivial) and decide(res.instance).verdict == YES
    inst, info = cldm_infeasible()
    res = reduce(inst, info["L"], eps=info["eps"], alphabet=enumerate_alphabet(ell=1, restriction=info["restriction"]))
    no_ok = res.trivial and decide(res.instance).verdict == NO
    secs = time.perf_counter() - t0
    ok = yes == 10 and no_ok and secs < 300
    criterion(8, ok, f"cldm-yes decided YES on {yes}/10 seeds, cldm-infeasible -> trivial NO: {no_ok}, {secs:.1f} s")
    assert ok


def test_c09_fkv_error(criterion):
    t0 = time.perf_counter()
    passed = 0
    ratios = []
    for trial in range(20):
        rng = stream(trial, "acceptance/fkv")
        lam, w = lowrank_observables(1024, 1, 8, rng)[0]
        op = SqMatrix(lambdas=lam, vectors=w)
        dense = op.dense()
        fro2 = float(np.sum(lam**2))
        best = float(np.sum(np.sort(lam**2)[:-8]))
        sk = fkv_sketch(op, 8, p=400, rng=rng)
        err = float(np.linalg.norm(dense - sk.approximation()) ** 2)
        ratios.append((err - best) / fro2)
        passed += err <= best + 0.1 * fro2
    secs = time.perf_counter() - t0
    ok = passed >= 18 and secs < 300
    criterion(9, ok, f"{passed}/20 trials within best + 0.1 ||O||_F^2 (need 18) at p = 400, median excess {np.median(ratios):.3f}, {secs:.1f} s")
    assert ok


def _unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


@pytest.mark.slow
def test_c10_estimator_calibration(criterion):
    N, eps, delta, trials = 10**6, 0.01, 0.01, 1000
    rng = np.random.default_rng(10)
    u = _unit(rng, N)
    v = 0.6 * u + 0.8 * _unit(rng, N)
    v /= np.linalg.norm(v)
    su = SqVector(u)
    truth = np.vdot(u, v)
    inner_fail = sum(abs(estimate_inner(su, v, eps, delta, rng) - truth) > eps for _ in range(trials))

    w, _ = np.linalg.qr(rng.standard_normal((N, 2)) + 1j * rng.standard_normal((N, 2)))
    lam = np.array([0.8, -0.6])
    A = SqMatrix(lambdas=lam, vectors=w)
    x = 0.7 * w[:, 0] + 0.7 * _unit(rng, N)
    y = 0.5 * w[:, 0] - 0.5j * w[:, 1] + 0.7 * _unit(rng, N)
    x /= np.linalg.norm(x)
    y /= np.linalg.norm(y)
    exact = np.sum(lam * np.conj(w.conj().T @ x) * (w.conj().T @ y))
    bil_fail = sum(abs(estimate_bilinear(A, x, y, eps, delta, rng) - exact) > eps * A.fro for _ in range(trials))
    ok = inner_fail <= 0.05 * trials and bil_fail <= 0.05 * trials
    criterion(10, ok, f"failure rates inner {inner_fail}/{trials}, bilinear {bil_fail}/{trials} (<= 5%) at N = 1e6")
    assert ok


@pytest.mark.slow
def test_c11_dequantized_vs_exact(criterion):
    t0 = time.perf_counter()
    alpha, beta = 0.05, 0.35
    agree = 0
    verdicts = []
    for k in range(20):
        rng = stream(k, "acceptance/dequant")
        obs = lowrank_observables(256, 4, 4, rng)
        y, _ = planted_targets(obs, rng, yes=(k % 2 == 0))
        mats = [(w * lam) @ w.conj().T for lam, w in obs]
        exact = decide(ObsConInstance(8, mats, y, alpha, beta)).verdict
        approx = dequantized_decide(obs, y, alpha, beta, rng=rng).verdict
        verdicts.append(exact)
        agree += exact == approx
    secs = time.perf_counter() - t0
    ok = agree >= 18 and secs < 600
    criterion(11, ok, f"{agree}/20 verdicts agree (need 18; {verdicts.count(YES)} exact YES), {secs:.1f} s")
    assert ok


# ---------------------------------------------------------------- criterion 12

GRID = 10**6
MARGIN = 0.03


def _bloch_coeffs(mats):
    paulis = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    c0 = np.real(np.trace(mats, axis1=1, axis2=2)) / 2
    vec = np.real(np.einsum("kij,pji->kp", mats, paulis)) / 2
    return c0, vec


def _grid_min(mats, y, slack):
    """Grid minimum over the Bloch ball of ``max_i |Tr(O_i rho) - y_i| - slack_i``."""
    from shadowcheck.decider import fibonacci_ball

    c0, vec = _bloch_coeffs(np.asarray(mats))
    pts = np.vstack([np.zeros((1, 3)), fibonacci_ball(GRID)])
    best = np.inf
    for lo in range(0, len(pts), 250_000):
        p = pts[lo: lo + 250_000]
        vals = np.max(np.abs(c0 + p @ vec.T - y) - slack, axis=1)
        best = min(best, float(vals.min()))
    return best


def _cldm_cases(rng):
    cases = []
    layouts = [[(0,), (0, 1)], [(0,), (1,), (0, 1)]]
    while len(cases) < 25:
        sets = layouts[len(cases) % 2]
        rho = random_density(4, rng)
        states = []
        for c in sets:
            marg = partial_trace(rho, [2, 2], c)
            noise = random_density(marg.shape[0], rng)
            states.append(0.98 * marg + 0.02 * noise)
        cases.append((sets, states, 0.05, 1.6, YES))
    while len(cases) < 50:
        rho01 = random_density(4, rng, rank=1)
        rho0 = random_density(2, rng, rank=1)
        gap = trace_norm(rho0 - partial_trace(rho01, [2, 2], [0]))
        if gap < 0.8:
            continue
        cases.append(([(0,), (0, 1)], [rho0, rho01], 0.005, gap / 2, NO))
    return cases


def _random_unitary(rng, dim=2):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    return q


def _check_cases(rng, eps=0.2):
    """Planted-consistent and planted-contradictory check sets, labelled by grid search.

    Contradictory sets pair a random check with a slightly rotated copy whose
    target sits far away; the grid decides every label, planting only makes
    both sides common.
    """
    yes, no = [], []
    while len(yes) < 25 or len(no) < 25:
        checks = []
        if rng.random() < 0.5:
            rho = random_density(2, rng)
            for _ in range(int(rng.integers(2, 4))):
                c = CheckTriple(_random_unitary(rng), 0.0, float(rng.uniform(0, 0.25)))
                p = c.accept_probability(rho)
                c.r = float(np.clip(p + rng.uniform(-c.s, c.s), 0, 1))
                checks.append(c)
        else:
            v = _random_unitary(rng)
            r = float(rng.uniform(0, 0.2))
            checks.append(CheckTriple(v, r, float(rng.uniform(0, 0.1))))
            tilt = scipy_expm(0.2j * random_hermitian(2, rng))
            checks.append(CheckTriple(tilt @ v, 1 - r - float(rng.uniform(0, 0.2)), float(rng.uniform(0, 0.1))))
            if rng.random() < 0.5:
                checks.append(CheckTriple(_random_unitary(rng), float(rng.uniform(0, 1)), float(rng.uniform(0, 0.25))))
        mats = [c.V.conj().T @ c.accept_projector() @ c.V for c in checks]
        r = np.array([c.r for c in checks])
        s = np.array([c.s for c in checks])
        if _grid_min(mats, r, s) <= 0:
            if len(yes) < 25:
                yes.append((checks, YES))
        elif _grid_min(mats, r, s + eps) >= MARGIN:
            if len(no) < 25:
                no.append((checks, NO))
    return yes + no, eps


def _bloc_cases(rng):
    yes, no = [], []
    while len(yes) < 25 or len(no) < 25:
        want_yes = rng.random() < 0.5
        rho = random_density(2, rng)
        blocks = []
        for _ in range(int(rng.integers(1, 4))):
            obs = [_random_1q_observable(rng) for _ in range(int(rng.integers(1, 4)))]
            a = float(rng.choice([0.05, 0.1, 0.15, 0.2]))
            b = a + float(rng.choice([0.15, 0.2, 0.25, 0.3]))
            if want_yes:
                ys = [np.real(np.trace(o @ rho)) + rng.uniform(-a / 2, a / 2) for o in obs]
            else:
                ys = list(rng.uniform(-1, 1, len(obs)))
            blocks.append((obs, list(np.clip(ys, -1, 1)), a, b))
        mats = [o for bo, _, _, _ in blocks for o in bo]
        ys = np.array([y for _, by, _, _ in blocks for y in by])
        alphas = np.array([a for bo, _, a, _ in blocks for _ in bo])
        betas = np.array([b for bo, _, _, b in blocks for _ in bo])
        if _grid_min(mats, ys, alphas) <= 0:
            if len(yes) < 25:
                yes.append((BlockInstance(1, blocks), YES))
        elif _grid_min(mats, ys, betas) >= MARGIN:
            if len(no) < 25:
                no.append((BlockInstance(1, blocks), NO))
    return yes + no


def test_c12_transform_preservation(criterion):
    rng = np.random.default_rng(12)

    cldm_ok = 0
    for sets, states, a, b, truth in _cldm_cases(rng):
        inst, _ = cldm_to_obscon(sets, states, a, b, k=2)
        cldm_ok += decide(inst).verdict == truth

    cases, eps = _check_cases(rng)
    check_ok = 0
    target_gap = Fraction(1, 5) ** 2 / 8
    gap_exact = check_parameters(eps, 0)["beta"] - check_parameters(eps, 0)["alpha"] == target_gap
    for checks, truth in cases:
        inst, thr = checks_to_obscon(checks, eps)
        gap_exact &= thr["beta"] - thr["alpha"] == target_gap
        check_ok += decide(inst).verdict == truth

    bloc_ok = 0
    identity = True
    for b, truth in _bloc_cases(rng):
        inst, par = bloc_flatten(b)
        identity &= par["beta"] - par["alpha"] == par["g"] ** 2 / 16
        bloc_ok += decide(inst).verdict == truth

    L, delta, runs = 10, 0.01, 1000
    draws = coupon_draws(L, delta)
    srng = np.random.default_rng(1212)
    sampler = lambda r: (int(r.integers(0, L)), None)  # noqa: E731
    complete = sum(sampled_to_explicit(sampler, L, delta, srng).complete for _ in range(runs))

    ok = cldm_ok == 50 and check_ok == 50 and bloc_ok == 50 and identity and gap_exact and complete >= (1 - 2 * delta) * runs
    criterion(
        12,
        ok,
        f"verdicts preserved cldm {cldm_ok}/50, check {check_ok}/50, bloc {bloc_ok}/50; "
        f"g^2/16 exact: {identity}; eps^2/8 exact: {gap_exact}; coupon {complete}/{runs} complete at {draws} draws (>= {1 - 2 * delta:.2f})",
    )
    assert ok
