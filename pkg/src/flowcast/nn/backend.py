"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise the
numpy reference implementation is used. Setting the environment variable
``FLOWCAST_PURE_PYTHON=1`` forces the fallback (useful for benchmarking and
debugging).
"""
from __future__ import annotations

import os

from . import kernels_numpy

if os.environ.get("FLOWCAST_PURE_PYTHON"):
    _impl = kernels_numpy
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = kernels_numpy

BACKEND_NAME: str = _impl.BACKEND_NAME
lstm_cell_forward = _impl.lstm_cell_forward
lstm_cell_backward = _impl.lstm_cell_backward
