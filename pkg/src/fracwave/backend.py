"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the pure
NumPy module is used.  Set ``FRACWAVE_FORCE_FALLBACK=1`` to force the pure
backend (used by the benchmark to compare the two).
"""

import os

from . import _kernels_py

if os.environ.get("FRACWAVE_FORCE_FALLBACK", "") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py


def active() -> str:
    """Name of the kernel backend in use: 'compiled' or 'python'."""
    return kernels.BACKEND
