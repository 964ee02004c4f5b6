"""Pure-numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature and
the same output (bit-for-bit for integer results, to rounding for floats).
"""
from itertools import combinations
from math import comb

import numpy as np


def compositions(total, parts):
    """All nonnegative integer vectors of length `parts` summing to `total`.

    Rows come in ascending lexicographic order.
    """
    if parts < 1 or total < 0:
        raise ValueError("need parts >= 1 and total >= 0")
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    count = comb(total + parts - 1, parts - 1)
    slots = total + parts - 1
    bars = np.fromiter(
        (c for combo in combinations(range(slots), parts - 1) for c in combo),
        dtype=np.int64,
        count=count * (parts - 1),
    ).reshape(count, parts - 1)
    edges = np.empty((count, parts + 1), dtype=np.int64)
    edges[:, 0] = -1
    edges[:, 1:-1] = bars
    edges[:, -1] = slots
    return np.diff(edges, axis=1) - 1


def local_values(bases, outcomes, table):
    """Per-record product of site factors ``table[s, bases[l, s], outcomes[l, s]]``."""
    bases = np.asarray(bases, dtype=np.int64)
    outcomes = np.asarray(outcomes, dtype=np.int64)
    nrec, nsite = bases.shape
    if nsite == 0:
        return np.ones(nrec, dtype=np.complex128)
    picked = table[np.arange(nsite)[None, :], bases, outcomes]
    return np.prod(picked, axis=1)


def pauli_apply(vec, xmask, zmask):
    """Apply the Hermitian Pauli ``i^{|x&z|} X^x Z^z`` to a state vector.

    Masks address bits of the amplitude index directly.
    """
    vec = np.asarray(vec, dtype=np.complex128)
    idx = np.arange(vec.shape[0], dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & zmask) & 1)
    phase = 1j ** (int(xmask & zmask).bit_count() % 4)
    out = np.empty_like(vec)
    out[idx ^ xmask] = phase * signs * vec
    return out


def frontier_mask(prev_keys, cand_keys):
    """Membership of each candidate key in the (sorted, unique) previous frontier."""
    return np.isin(np.asarray(cand_keys, dtype=np.int64), np.asarray(prev_keys, dtype=np.int64))


def bucket_match(left, right):
    """Permutation ``perm`` with ``right[perm[l]] == left[l]``.

    Within each label the right-hand records are consumed in index order, so
    the matching is canonical.  Returns None when the label multisets differ.
    """
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    if left.shape != right.shape:
        return None
    order_l = np.argsort(left, kind="stable")
    order_r = np.argsort(right, kind="stable")
    if not np.array_equal(left[order_l], right[order_r]):
        return None
    perm = np.empty_like(left)
    perm[order_l] = order_r
    return perm


def alias_table(weights):
    """Walker alias table ``(prob, alias)`` for sampling proportional to ``weights``.

    Vose's construction with explicit small/large stacks.  Draw ``k`` uniform
    in ``[0, n)`` and keep it with probability ``prob[k]``, else take ``alias[k]``.
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    n = w.size
    total = w.sum()
    if n == 0 or not total > 0:
        raise ValueError("weights must have a positive sum")
    scaled = (w * (n / total)).tolist()
    prob = [1.0] * n
    alias = list(range(n))
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large[-1]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            large.pop()
            small.append(g)
    return np.array(prob, dtype=np.float64), np.array(alias, dtype=np.int64)
