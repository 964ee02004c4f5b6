"""Pauli strings for qubits and Weyl strings for odd-prime qudits."""
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .config import MAX_DIM
from .errors import DimensionError, InvalidInputError
from .linalg import kron_all

_SINGLE = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def is_odd_prime(d):
    d = int(d)
    return d > 2 and d % 2 == 1 and all(d % q for q in range(3, int(d**0.5) + 1, 2))


@lru_cache(maxsize=None)
def weyl_single(d, a, b):
    """The qudit Weyl operator X^a Z^b."""
    w = np.exp(2j * np.pi / d)
    x = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    z = np.diag(w ** np.arange(d))
    out = np.linalg.matrix_power(x, a % d) @ np.linalg.matrix_power(z, b % d)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PauliString:
    """A scaled Pauli (qubit) or Hermitian-part Weyl (qudit) string.

    For qubits ``letters`` is a string over ``IXYZ`` and site 0 is the most
    significant tensor factor.  For qudits ``letters`` is a tuple of ``(a, b)``
    labels of ``X^a Z^b`` and ``part`` picks the Hermitian combination
    ``(W + W^dagger)/2`` ("re") or ``(W - W^dagger)/(2i)`` ("im").
    """

    letters: object
    d: int = 2
    coeff: float = 1.0
    part: str = "re"

    def __post_init__(self):
        if self.d == 2:
            letters = str(self.letters).upper()
            if any(c not in _SINGLE for c in letters):
                raise InvalidInputError(f"bad Pauli letters {self.letters!r}")
            object.__setattr__(self, "letters", letters)
        else:
            if not is_odd_prime(self.d):
                raise InvalidInputError(f"qudit dimension {self.d} is not an odd prime")
            labels = tuple((int(a) % self.d, int(b) % self.d) for a, b in self.letters)
            object.__setattr__(self, "letters", labels)
            if self.part not in ("re", "im"):
                raise InvalidInputError("part must be 're' or 'im'")
        if not np.isfinite(self.coeff):
            raise InvalidInputError("non-finite coefficient")

    @classmethod
    def from_str(cls, s, coeff=1.0):
        """Parse ``"XZI"``, ``"-XZ"`` or ``"+Y"``."""
        s = s.strip()
        sign = 1.0
        if s[:1] in "+-":
            sign = -1.0 if s[0] == "-" else 1.0
            s = s[1:]
        return cls(s, 2, sign * coeff)

    @property
    def n(self):
        return len(self.letters)

    @property
    def dim(self):
        return self.d**self.n

    def is_identity_site(self, s):
        return self.letters[s] == "I" if self.d == 2 else self.letters[s] == (0, 0)

    @property
    def weight(self):
        return sum(not self.is_identity_site(s) for s in range(self.n))

    @property
    def support(self):
        return tuple(s for s in range(self.n) if not self.is_identity_site(s))

    def masks(self):
        """Qubit bit masks ``(x, z)`` with site 0 at the most significant bit."""
        if self.d != 2:
            raise InvalidInputError("masks are defined for qubit strings only")
        x = z = 0
        for s, c in enumerate(self.letters):
            bx, bz = _XZ[c]
            x |= bx << (self.n - 1 - s)
            z |= bz << (self.n - 1 - s)
        return x, z

    def to_matrix(self):
        if self.d ** self.n > MAX_DIM:
            raise DimensionError(f"Pauli string dimension {self.d}^{self.n} exceeds cap")
        if self.d == 2:
            return self.coeff * kron_all([_SINGLE[c] for c in self.letters])
        w = kron_all([weyl_single(self.d, a, b) for a, b in self.letters])
        if self.part == "re":
            return self.coeff * (w + w.conj().T) / 2
        return self.coeff * (w - w.conj().T) / 2j

    def scaled(self, t):
        return PauliString(self.letters, self.d, self.coeff * t, self.part)

    def __str__(self):
        if self.d == 2:
            sign = "-" if self.coeff < 0 else ""
            mag = abs(self.coeff)
            return sign + ("" if mag == 1 else f"{mag:g}*") + self.letters
        body = ",".join(f"{a}{b}" for a, b in self.letters)
        return f"{self.coeff:g}*W{self.part}[{body}]/d{self.d}"

    def to_json(self):
        if self.d == 2:
            out = {"pauli": self.letters}
        else:
            out = {"weyl": [list(x) for x in self.letters], "d": self.d, "part": self.part}
        if self.coeff != 1.0:
            out["coeff"] = self.coeff
        return out

    @classmethod
    def from_json(cls, obj):
        coeff = float(obj.get("coeff", 1.0))
        if "pauli" in obj:
            return cls.from_str(obj["pauli"], coeff)
        return cls(tuple(tuple(x) for x in obj["weyl"]), int(obj["d"]), coeff, obj.get("part", "re"))


def pauli_matrix(p):
    """Matrix of a Pauli string given as a PauliString or a letter string."""
    if isinstance(p, str):
        p = PauliString.from_str(p)
    return p.to_matrix()


pauli_to_matrix = pauli_matrix


def embed(p, n, sites):
    """Place a string acting on ``sites`` into an ``n``-site identity background."""
    if p.d == 2:
        letters = ["I"] * n
        for s, c in zip(sites, p.letters):
            letters[s] = c
        return PauliString("".join(letters), 2, p.coeff)
    labels = [(0, 0)] * n
    for s, lab in zip(sites, p.letters):
        labels[s] = lab
    return PauliString(tuple(labels), p.d, p.coeff, p.part)


def all_pauli_strings(n, include_identity=False):
    out = ["".join(t) for t in product("IXYZ", repeat=n)]
    if not include_identity:
        out = out[1:]
    return [PauliString(s) for s in out]


def low_weight_paulis(n, kmax):
    """All non-identity qubit strings of weight at most ``kmax``."""
    return [p for p in all_pauli_strings(n) if p.weight <= kmax]


def weyl_hermitian_strings(n, d, include_identity=False):
    """Hermitian and anti-Hermitian parts of all Weyl strings on ``n`` qudits.

    Labels ``(a, b)`` and ``(-a, -b)`` give the same parts up to sign, so only
    one representative of each pair is kept, and zero ``im`` parts are skipped.
    """
    seen = set()
    out = []
    for labels in product(product(range(d), repeat=2), repeat=n):
        neg = tuple(((-a) % d, (-b) % d) for a, b in labels)
        if neg in seen or labels in seen:
            continue
        seen.add(labels)
        if all(lab == (0, 0) for lab in labels):
            if include_identity:
                out.append(PauliString(labels, d))
            continue
        out.append(PauliString(labels, d, 1.0, "re"))
        out.append(PauliString(labels, d, 1.0, "im"))
    return out
