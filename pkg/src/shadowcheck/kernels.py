"""Hot-loop kernels, compiled when available.

The Cython extension ``_ckernels`` is used if it was built; otherwise the numpy
fallback in ``_pykernels`` is used.  Setting ``SHADOWCHECK_PURE_PYTHON=1`` in
the environment forces the fallback.
"""
import os

from . import _pykernels

if os.environ.get("SHADOWCHECK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

compositions = _impl.compositions
local_values = _impl.local_values
pauli_apply = _impl.pauli_apply
frontier_mask = _impl.frontier_mask
bucket_match = _impl.bucket_match
alias_table = _impl.alias_table


def backends():
    """Map of available backend name -> module, for tests and benchmarks."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels
    return out
