"""Backend selection for the numeric kernels.

The compiled extension is used when it imports; ``QGRAF_PURE_PYTHON=1`` forces
the pure-Python fallback. ``BACKEND`` names the implementation in use.
"""
import os

from . import _kernels_py

if os.environ.get("QGRAF_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

STATUS_OK = _kernels_py.STATUS_OK
STATUS_CAP = _kernels_py.STATUS_CAP

product_length = _impl.product_length
qpoch_inf = _impl.qpoch_inf
qpoch_ratio = _impl.qpoch_ratio
qpoch_inf_vec = _impl.qpoch_inf_vec
phi_sum = _impl.phi_sum
phi_sum_vec = _impl.phi_sum_vec
asc_table = _impl.asc_table


def available_backends():
    """Map backend name to kernel module for every importable implementation."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
