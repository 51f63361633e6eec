"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``HIORD_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

NAME = "python"
kernels = _kernels_py

if os.environ.get("HIORD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        NAME = "cython"


def get(name: str | None = None):
    """Return the kernel module ``name`` ('cython' or 'python'); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
