import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowcheck import _pykernels, kernels

BACKENDS = list(kernels.backends().items())
ids = [name for name, _ in BACKENDS]


def test_backend_is_selected():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in kernels.backends()


@pytest.mark.parametrize("name,mod", BACKENDS, ids=ids)
def test_compositions_match_itertools(name, mod):
    for total, parts in [(0, 1), (3, 1), (4, 3), (5, 4)]:
        expect = sorted(c for c in itertools.product(range(total + 1), repeat=parts) if sum(c) == total)
        assert mod.compositions(total, parts).tolist() == [list(c) for c in expect]


@pytest.mark.parametrize("name,mod", BACKENDS, ids=ids)
def test_compositions_count(name, mod):
    from math import comb

    assert len(mod.compositions(6, 9)) == comb(14, 8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 500), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_local_values_parity(nrec, nsite, seed):
    rng = np.random.default_rng(seed)
    bases = rng.integers(0, 3, (nrec, nsite))
    outs = rng.integers(0, 2, (nrec, nsite))
    table = rng.standard_normal((nsite, 3, 2)) + 1j * rng.standard_normal((nsite, 3, 2))
    ref = np.prod(table[np.arange(nsite), bases, outs], axis=1)
    for _, mod in BACKENDS:
        np.testing.assert_allclose(mod.local_values(bases, outs, table), ref, rtol=1e-12)


def _pauli_oracle(n, x, z):
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=np.complex128)
    phase = 1j ** bin(x & z).count("1")
    for j in range(dim):
        out[j ^ x, j] = phase * (-1) ** bin(j & z).count("1")
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.data())
def test_pauli_apply_matches_matrix(n, data):
    x = data.draw(st.integers(0, 2**n - 1))
    z = data.draw(st.integers(0, 2**n - 1))
    rng = np.random.default_rng(data.draw(st.integers(0, 1000)))
    vec = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    ref = _pauli_oracle(n, x, z) @ vec
    for _, mod in BACKENDS:
        np.testing.assert_allclose(mod.pauli_apply(vec, x, z), ref, atol=1e-12)


def test_pauli_apply_is_hermitian_involution():
    rng = np.random.default_rng(0)
    vec = rng.standard_normal(16) + 0j
    for _, mod in BACKENDS:
        np.testing.assert_allclose(mod.pauli_apply(mod.pauli_apply(vec, 5, 6), 5, 6), vec, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-50, 10_000), max_size=60), st.lists(st.integers(-50, 10_000), max_size=200))
def test_frontier_mask_parity(prev, cand):
    prev = np.unique(np.array(prev, dtype=np.int64))
    cand = np.array(cand, dtype=np.int64)
    ref = np.isin(cand, prev)
    for _, mod in BACKENDS:
        assert np.array_equal(mod.frontier_mask(prev, cand), ref)


def test_frontier_mask_wide_span():
    prev = np.array([0, 10**12], dtype=np.int64)
    cand = np.array([0, 5, 10**12, -1], dtype=np.int64)
    for _, mod in BACKENDS:
        assert mod.frontier_mask(prev, cand).tolist() == [True, False, True, False]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 5), max_size=80), st.integers(0, 1000))
def test_bucket_match_is_canonical_permutation(labels, seed):
    left = np.array(labels, dtype=np.int64)
    right = np.random.default_rng(seed).permutation(left)
    results = []
    for _, mod in BACKENDS:
        perm = mod.bucket_match(left, right)
        assert sorted(perm.tolist()) == list(range(len(left)))
        assert np.array_equal(right[perm], left)
        results.append(np.asarray(perm).tolist())
    assert all(r == results[0] for r in results)


def test_bucket_match_mismatch_returns_none():
    for _, mod in BACKENDS:
        assert mod.bucket_match(np.array([0, 1]), np.array([1, 1])) is None


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=60).filter(lambda w: sum(w) > 0))
def test_alias_table_reproduces_distribution(weights):
    w = np.array(weights)
    n = len(w)
    for _, mod in BACKENDS:
        prob, alias = mod.alias_table(w)
        # exact induced distribution: each slot carries mass 1/n
        induced = prob / n
        np.add.at(induced, alias, (1 - prob) / n)
        np.testing.assert_allclose(induced, w / w.sum(), atol=1e-12)
    ref = _pykernels.alias_table(w)
    for _, mod in BACKENDS:
        out = mod.alias_table(w)
        np.testing.assert_allclose(out[0], ref[0], atol=1e-15)
        assert np.array_equal(out[1], ref[1])


def test_alias_table_rejects_bad_weights():
    for _, mod in BACKENDS:
        with pytest.raises(ValueError):
            mod.alias_table(np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            mod.alias_table(np.zeros(3))
