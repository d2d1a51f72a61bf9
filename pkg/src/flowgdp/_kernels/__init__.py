"""Hot inner loops, compiled when available.

``BACKEND`` is ``"cython"`` when the extension imported and ``"python"``
otherwise. Set ``FLOWGDP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("FLOWGDP_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

lasso_cd = _impl.lasso_cd
brandes = _impl.brandes


def available_backends():
    """Map backend name to kernel module, for tests and benchmarks."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
