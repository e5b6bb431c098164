"""Backend selection for the trajectory kernel."""

import os

from . import _kernels_py

if os.environ.get("REDISGROWTH_PURE"):
    simulate_totals = _kernels_py.simulate_totals
    BACKEND = "python"
else:
    try:
        from ._kernels import simulate_totals
        BACKEND = "cython"
    except ImportError:  # extension not built
        simulate_totals = _kernels_py.simulate_totals
        BACKEND = "python"

__all__ = ["simulate_totals", "BACKEND"]
