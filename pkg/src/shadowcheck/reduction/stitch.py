"""Assemble per-edge weight matrices into one global product-snapshot shadow."""
from fractions import Fraction

import numpy as np

from .. import kernels
from ..errors import InvalidInputError
from ..shadows import LOCAL, QUDIT, Shadow
from .alphabet import rational_kron
from .dp import marginal_match


def expand_pairs(N):
    """Row-major list of ``(j, k)`` pairs with ``N[j, k]`` copies each."""
    N = np.asarray(N, dtype=np.int64)
    m = N.shape[0]
    flat = np.repeat(np.arange(m * m), N.ravel())
    return flat // m, flat % m


def stitch_labels(seq):
    """Per-record site labels, shape ``(L, n)``, for a marginal-matched sequence.

    Edge 1 is expanded in row-major order.  For every later edge the local
    pairs are matched to the current records by equal shared-site labels
    (earliest unused local pair first), which is a perfect matching because
    the multiplicities agree.
    """
    seq = [np.asarray(N, dtype=np.int64) for N in seq]
    if not seq:
        raise InvalidInputError("empty sequence")
    L = int(seq[0].sum())
    for i in range(len(seq) - 1):
        if not marginal_match(seq[i], seq[i + 1]):
            raise InvalidInputError(f"edges {i} and {i + 1} do not have matching marginals")
    left, right = expand_pairs(seq[0])
    labels = np.empty((L, len(seq) + 1), dtype=np.int64)
    labels[:, 0], labels[:, 1] = left, right
    for i, N in enumerate(seq[1:], start=1):
        if int(N.sum()) != L:
            raise InvalidInputError("weight matrices have different totals")
        loc_left, loc_right = expand_pairs(N)
        perm = kernels.bucket_match(labels[:, i], loc_left)
        if perm is None:
            raise AssertionError("matching failed despite matching marginals")
        labels[:, i + 1] = loc_right[perm]
    return labels


def stitch_global_shadow(seq, alphabet, L=None):
    """Shadow whose records realize the stitched site labels."""
    labels = stitch_labels(seq)
    if L is not None and labels.shape[0] != L:
        raise InvalidInputError(f"sequence total {labels.shape[0]} differs from L = {L}")
    n_sites = labels.shape[1]
    width = alphabet.record_width
    codes = [alphabet.record_codes(j) for j in range(alphabet.m)]
    code_b = np.array([c[0] for c in codes], dtype=np.int64)
    code_o = np.array([c[1] for c in codes], dtype=np.int64)
    bases = code_b[labels].reshape(labels.shape[0], n_sites * width)
    outcomes = code_o[labels].reshape(labels.shape[0], n_sites * width)
    if alphabet.kind == "qubit":
        shadow = Shadow(LOCAL, n_sites * width, 2, bases=bases, outcomes=outcomes, K=1)
    else:
        shadow = Shadow(QUDIT, n_sites, alphabet.site_dim, bases=bases, outcomes=outcomes, K=1)
    shadow.meta["site_labels"] = labels.tolist()
    shadow.meta["site_width"] = width
    return shadow


def edge_marginal(labels, i, alphabet):
    """Float empirical marginal on chain sites ``(i, i+1)``."""
    mats = alphabet.mats
    L = labels.shape[0]
    m = alphabet.m
    counts = np.bincount(labels[:, i] * m + labels[:, i + 1], minlength=m * m)
    dim = mats.shape[1]
    out = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for c in np.flatnonzero(counts):
        out += counts[c] * np.kron(mats[c // m], mats[c % m])
    return out / L


def weights_marginal(N, alphabet):
    """Float ``(1/L) sum N_jk eta_j (x) eta_k``."""
    N = np.asarray(N)
    L = N.sum()
    m = alphabet.m
    dim = alphabet.mats.shape[1]
    out = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for j, k in zip(*np.nonzero(N)):
        out += N[j, k] * np.kron(alphabet.mats[j], alphabet.mats[k])
    return out / L


def edge_marginal_from_shadow(shadow, i, width):
    """Float empirical marginal of chain sites ``(i, i+1)`` rebuilt from raw records."""
    cols = slice(i * width, (i + 2) * width)
    sub = Shadow(shadow.protocol, 2 * width, shadow.d, bases=shadow.bases[:, cols], outcomes=shadow.outcomes[:, cols])
    keys, first, counts = np.unique(
        np.concatenate([sub.bases, sub.outcomes], axis=1), axis=0, return_index=True, return_counts=True
    )
    total = sum(c * sub.snapshot(f) for f, c in zip(first, counts))
    return total / shadow.L


def _exact_site_snapshot(bases, bits):
    from .alphabet import _EXACT, rational_pair

    out = None
    for b, o in zip(bases, bits):
        f = rational_pair(*_EXACT["XYZ"[b] + ("+" if o == 0 else "-")])
        out = f if out is None else rational_kron(out, f)
    return out


def exact_edge_marginal_from_shadow(shadow, i, width):
    """Exact (re, im) Fraction marginal of chain sites ``(i, i+1)`` from raw records.

    Each record's snapshot is a product, and every factor outside the pair has
    unit trace, so the reduced snapshot is the product of the pair's factors.
    """
    if shadow.protocol != LOCAL:
        raise InvalidInputError("rational mode needs a qubit local shadow")
    cols = slice(i * width, (i + 2) * width)
    b, o = shadow.bases[:, cols], shadow.outcomes[:, cols]
    keys, counts = np.unique(np.concatenate([b, o], axis=1), axis=0, return_counts=True)
    total_re = total_im = None
    for key, c in zip(keys, counts):
        re, im = _exact_site_snapshot(key[: 2 * width], key[2 * width:])
        re, im = re * int(c), im * int(c)
        total_re = re if total_re is None else total_re + re
        total_im = im if total_im is None else total_im + im
    L = Fraction(shadow.L)
    return total_re / L, total_im / L


def exact_weights_marginal(N, alphabet):
    """Exact (re, im) Fraction ``(1/L) sum N_jk eta_j (x) eta_k``."""
    N = np.asarray(N)
    L = Fraction(int(N.sum()))
    total_re = total_im = None
    for j, k in zip(*np.nonzero(N)):
        re, im = rational_kron(alphabet.exact(j), alphabet.exact(k))
        c = int(N[j, k])
        total_re = re * c if total_re is None else total_re + re * c
        total_im = im * c if total_im is None else total_im + im * c
    return total_re / L, total_im / L


def stitching_identity_holds(shadow, seq, alphabet, exact=True):
    """Check every edge marginal of the shadow against its weight matrix."""
    width = alphabet.record_width
    for i, N in enumerate(seq):
        if exact:
            a = exact_edge_marginal_from_shadow(shadow, i, width)
            b = exact_weights_marginal(N, alphabet)
            if not (np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])):
                return False
        else:
            diff = edge_marginal_from_shadow(shadow, i, width) - weights_marginal(N, alphabet)
            if np.max(np.abs(diff)) > 1e-12:
                return False
    return True
