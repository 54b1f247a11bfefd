"""Kernel dispatch: the compiled extension when it imports, NumPy otherwise.

Set ``MINKISO_PURE_PYTHON=1`` to force the NumPy fallback.
"""

import os

from . import _pykernels

if os.environ.get("MINKISO_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
linear_bounds = _impl.linear_bounds
simplex_stiffness = _impl.simplex_stiffness
abp_integrand = _impl.abp_integrand


def available_backends():
    """Modules implementing the kernel API, keyed by backend name."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
