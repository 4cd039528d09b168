"""Hot loops, each with a numba implementation and a numpy fallback.

The names exported here resolve to whichever backend ``BETACOAL_BACKEND``
selects; the backend-specific variants remain importable for comparison.
"""

from .._backend import USE_NUMBA
from . import chain, recursion, rng

if USE_NUMBA:
    row_log_norms = recursion.row_log_norms_numba
    laplace_log_series = recursion.laplace_log_series_numba
    mean_time_series = recursion.mean_time_series_numba
    simulate_batch = chain.simulate_batch_numba
else:
    row_log_norms = recursion.row_log_norms_numpy
    laplace_log_series = recursion.laplace_log_series_numpy
    mean_time_series = recursion.mean_time_series_numpy
    simulate_batch = chain.simulate_batch_numpy

trace_path = chain.trace_path

__all__ = [
    "row_log_norms",
    "laplace_log_series",
    "mean_time_series",
    "simulate_batch",
    "trace_path",
    "chain",
    "recursion",
    "rng",
]
