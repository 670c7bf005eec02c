"""Backend selection for the stencil kernels.

The compiled extension is used when it was built; set
``GPUTHERM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("GPUTHERM_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def get_backend(name=None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    name = name or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None
