"""Centralized numerical tolerances."""
from dataclasses import asdict, dataclass, replace

MAX_DIM = 4096


@dataclass(frozen=True)
class Tolerances:
    """Default tolerances shared by every module.

    Profiles are plain overrides of these fields; see :func:`profile`.
    """

    hermitian: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-10
    opnorm: float = 1e-10
    eig_residual: float = 1e-8
    imag: float = 1e-8
    lp_marginal: float = 1e-7
    float_stitch: float = 1e-12
    decider_cap: int = 5000

    def to_dict(self):
        return asdict(self)

    def with_overrides(self, **kw):
        return replace(self, **kw)


DEFAULT = Tolerances()

_PROFILES = {
    "default": {},
    "strict": {"hermitian": 1e-12, "trace": 1e-12, "psd": 1e-12, "lp_marginal": 1e-9},
    "loose": {"hermitian": 1e-8, "trace": 1e-8, "psd": 1e-8, "opnorm": 1e-8, "lp_marginal": 1e-6},
}


def profile(name):
    """Return the named tolerance profile ("default", "strict" or "loose")."""
    try:
        return DEFAULT.with_overrides(**_PROFILES[name])
    except KeyError:
        from .errors import InvalidInputError

        raise InvalidInputError(f"unknown tolerance profile {name!r}") from None
