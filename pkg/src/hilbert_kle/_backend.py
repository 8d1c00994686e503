"""Pick the kernel implementation at import time.

The compiled extension is used when it was built; set ``HILBERT_KLE_PURE=1``
to force the pure-Python kernels.
"""
import os

from . import _kernels_py

_FORCE_PURE = os.environ.get("HILBERT_KLE_PURE", "") not in ("", "0")

if _FORCE_PURE:
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_c as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"

g_orthonormalize = kernels.g_orthonormalize
residual_energy = kernels.residual_energy


def available_backends():
    """Map of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_c
    except ImportError:
        return out
    out["cython"] = _kernels_c
    return out
