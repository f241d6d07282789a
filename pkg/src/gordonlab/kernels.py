"""Select the transfer-block kernel backend at import time.

The compiled ``_kernels`` extension is used when it was built; otherwise the
pure-Python ``_kernels_py`` module.  Set ``GORDONLAB_PURE_PYTHON=1`` to force
the fallback.
"""

import os

if os.environ.get("GORDONLAB_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as _impl

        BACKEND = "python"

block = _impl.block
transfer_product = _impl.transfer_product
propagate_pc = _impl.propagate_pc
trajectory_pc = _impl.trajectory_pc

__all__ = ["BACKEND", "block", "transfer_product", "propagate_pc", "trajectory_pc"]
