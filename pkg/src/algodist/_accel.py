"""Backend selection for the numeric kernels.

Set ``ALGODIST_PURE_NUMPY=1`` to force the pure-numpy path even when numba
is importable.  The choice is made once at import time.
"""
import os

_FLAG = os.environ.get("ALGODIST_PURE_NUMPY", "").strip().lower()
FORCE_NUMPY = _FLAG not in ("", "0", "false", "no")

try:
    import numba
    import warnings

    # an outdated system TBB only means numba falls back to omp/workqueue
    warnings.filterwarnings(
        "ignore", message="The TBB threading layer", category=numba.NumbaWarning
    )
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep in CI
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not FORCE_NUMPY


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
