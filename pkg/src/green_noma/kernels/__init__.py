"""Hot numeric kernels: compiled core with a pure-Python fallback.

The Cython extension `_core` is preferred when importable; setting
GREEN_NOMA_PURE=1 forces the fallback.  Both backends implement the same
algorithms with the same tie-breaking; exact dissimilarity ties in the
swap search may still resolve differently because of floating-point
summation order.
"""

import os

if os.environ.get("GREEN_NOMA_PURE", "") == "1":
    from . import _core_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        from . import _core_py as _impl

        BACKEND = "python"

pam = _impl.pam
solve_rates = _impl.solve_rates

RATES_TARGET_MET = 0
RATES_BUDGET_LIMITED = 1
RATES_BUDGET_NO_FLOORS = 2

__all__ = [
    "BACKEND",
    "pam",
    "solve_rates",
    "RATES_TARGET_MET",
    "RATES_BUDGET_LIMITED",
    "RATES_BUDGET_NO_FLOORS",
]
