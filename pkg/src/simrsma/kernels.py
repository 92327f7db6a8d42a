"""Kernel selection.

The compiled extension is used when it was built; otherwise (or when
``SIMRSMA_PURE_PYTHON=1`` is set) the numpy implementation is used. Both
expose ``forward_amplitudes`` and ``phase_gradient`` with identical contracts.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("SIMRSMA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

forward_amplitudes = _impl.forward_amplitudes
phase_gradient = _impl.phase_gradient
Propagator = _impl.Propagator
