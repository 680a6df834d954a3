"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` module.  Setting ``SGGMIX_PURE_PYTHON=1`` forces
the fallback.  Both backends produce bit-identical chains.
"""

import os

from . import _pykernels as python_kernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and not os.environ.get("SGGMIX_PURE_PYTHON"):
    kernels = compiled_kernels
else:
    kernels = python_kernels

BACKENDS = {"python": python_kernels}
if compiled_kernels is not None:
    BACKENDS["cython"] = compiled_kernels


def get_kernels(name: str | None = None):
    """Kernel module by name (``"python"`` or ``"cython"``); default is the active one."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None
