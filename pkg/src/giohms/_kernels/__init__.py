"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin.  ``GIOHMS_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def available():
    return tuple(_BACKENDS)


def get(name=None):
    """Return the kernel module ``name``, or the active default."""
    if name is None:
        name = os.environ.get("GIOHMS_BACKEND") or ("cython" if _ckernels is not None else "python")
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {available()}") from None


active = get()
