"""Backend selection for the hot kernels.

The numba path is used when numba imports cleanly, unless the environment
variable ``BETACOAL_BACKEND`` is set to ``numpy``.  The flag is read once at
import time; the numpy kernels stay importable either way so both paths can
be compared in one process.
"""

import os

BACKEND_ENV = "BETACOAL_BACKEND"

_requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the default order tries TBB first and warns when it is too old
        numba.config.THREADING_LAYER = "omp"
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested == "numba"


def _identity(fn=None, **_kwargs):
    if fn is None:
        return lambda f: f
    return fn


if HAVE_NUMBA:
    njit = numba.njit
    prange = numba.prange
else:  # pragma: no cover
    njit = _identity
    prange = range

# `jit` compiles only on the numba backend; scalar helpers decorated with it
# run as plain Python under the numpy backend.
jit = (lambda fn=None, **kw: numba.njit(fn, cache=True, **kw) if fn is not None
       else numba.njit(cache=True, **kw)) if USE_NUMBA else _identity


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
