"""Per-site snapshot alphabets for chains of qubit blocks or qudits."""
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from ..errors import InvalidInputError
from ..linalg import kron_all
from ..pauli import is_odd_prime
from ..shadows import QUBIT_SNAPSHOTS, _single_snapshots, qudit_eigvecs

QUBIT_LABELS = ("X+", "X-", "Y+", "Y-", "Z+", "Z-")

_H = Fraction(1, 2)
_T = Fraction(3, 2)
# exact (real, imaginary) parts of 3|psi><psi| - I for the six Pauli eigenstates
_EXACT = {
    "X+": ([[_H, _T], [_T, _H]], [[0, 0], [0, 0]]),
    "X-": ([[_H, -_T], [-_T, _H]], [[0, 0], [0, 0]]),
    "Y+": ([[_H, 0], [0, _H]], [[0, -_T], [_T, 0]]),
    "Y-": ([[_H, 0], [0, _H]], [[0, _T], [-_T, 0]]),
    "Z+": ([[2, 0], [0, -1]], [[0, 0], [0, 0]]),
    "Z-": ([[-1, 0], [0, 2]], [[0, 0], [0, 0]]),
}


def rational_pair(re, im):
    to = np.vectorize(Fraction, otypes=[object])
    return to(np.array(re, dtype=object)), to(np.array(im, dtype=object))


def rational_kron(a, b):
    """Kronecker product of exact complex matrices stored as (re, im) pairs."""
    return (np.kron(a[0], b[0]) - np.kron(a[1], b[1]), np.kron(a[0], b[1]) + np.kron(a[1], b[0]))


@dataclass(frozen=True)
class SnapshotAlphabet:
    """Snapshot list for one chain site.

    ``labels[j]`` describes snapshot ``j``: for qubit blocks a tuple of ``ell``
    labels from ``QUBIT_LABELS``, for qudits a pair ``(mu, b)`` with ``mu = d``
    meaning the computational basis.  ``mats[j]`` is the snapshot matrix.
    """

    kind: str
    site_dim: int
    ell: int
    labels: tuple
    mats: np.ndarray

    @property
    def m(self):
        return len(self.labels)

    @property
    def record_width(self):
        """Number of shadow sites one chain site occupies."""
        return self.ell if self.kind == "qubit" else 1

    def record_codes(self, j):
        """``(bases, outcomes)`` codes of snapshot ``j`` in shadow encoding."""
        if self.kind == "qubit":
            bases = ["XYZ".index(lab[0]) for lab in self.labels[j]]
            bits = [0 if lab[1] == "+" else 1 for lab in self.labels[j]]
            return bases, bits
        mu, b = self.labels[j]
        return [mu], [b]

    def exact(self, j):
        """Exact (re, im) Fraction matrices of snapshot ``j`` (qubit alphabets only)."""
        if self.kind != "qubit":
            raise InvalidInputError("exact snapshots exist for qubit alphabets only")
        out = None
        for lab in self.labels[j]:
            f = rational_pair(*_EXACT[lab])
            out = f if out is None else rational_kron(out, f)
        return out


def _expand_restriction(restriction):
    out = []
    for r in restriction:
        r = str(r).upper()
        if r in "XYZ" and len(r) == 1:
            out.extend([r + "+", r + "-"])
        elif r in QUBIT_LABELS:
            out.append(r)
        else:
            raise InvalidInputError(f"invalid restriction label {r!r}")
    if len(set(out)) != len(out):
        raise InvalidInputError("restriction repeats a label")
    return out


def enumerate_alphabet(ell=None, d=None, restriction=None):
    """Snapshot alphabet for ``ell``-qubit blocks or a single ``d``-level qudit.

    ``restriction`` limits the single-qubit labels (e.g. ``["Z"]`` or
    ``["Z+", "Z-", "X+"]``); for qudits it is a list of ``(mu, b)`` pairs.
    """
    if (ell is None) == (d is None):
        raise InvalidInputError("give exactly one of ell or d")
    if ell is not None:
        if not 1 <= ell <= 3:
            raise InvalidInputError("ell must be 1, 2 or 3")
        singles = list(QUBIT_LABELS) if restriction is None else _expand_restriction(restriction)
        single_mat = {lab: QUBIT_SNAPSHOTS["XYZ".index(lab[0]), 0 if lab[1] == "+" else 1] for lab in QUBIT_LABELS}
        labels = tuple(product(singles, repeat=ell))
        mats = np.array([kron_all([single_mat[x] for x in lab]) for lab in labels])
        return SnapshotAlphabet("qubit", 2**ell, ell, labels, mats)
    if not is_odd_prime(d) or d > 13:
        raise InvalidInputError("d must be an odd prime at most 13")
    table = _single_snapshots(qudit_eigvecs(d), d + 1)
    if restriction is None:
        labels = tuple((mu, b) for mu in range(d + 1) for b in range(d))
    else:
        labels = tuple((int(mu), int(b)) for mu, b in restriction)
        if any(not (0 <= mu <= d and 0 <= b < d) for mu, b in labels) or len(set(labels)) != len(labels):
            raise InvalidInputError("invalid qudit restriction")
    mats = np.array([table[mu, b] for mu, b in labels])
    return SnapshotAlphabet("qudit", d, 1, labels, mats)
