"""Exact and Monte Carlo numerics for the block-counting process of Beta(a, b)-coalescents."""

__version__ = "0.1.0"

from .rates import BetaParams, RateContext, RegimeError  # noqa: E402
from .ratefn import RateFunctionContext  # noqa: E402
from .laplace import (  # noqa: E402
    AdmissibilityError,
    Functional,
    LaplaceSeries,
    closed_form_E,
    kolmogorov_bound,
    laplace_series,
    laplace_series_hitting,
    record_probability,
    scaling_exponent,
    special_psi,
    special_psi_hitting,
    threshold_M,
)
from .simulator import SimConfig  # noqa: E402

__all__ = [
    "BetaParams",
    "RateContext",
    "RegimeError",
    "RateFunctionContext",
    "AdmissibilityError",
    "Functional",
    "LaplaceSeries",
    "closed_form_E",
    "kolmogorov_bound",
    "laplace_series",
    "laplace_series_hitting",
    "record_probability",
    "scaling_exponent",
    "special_psi",
    "special_psi_hitting",
    "threshold_M",
    "SimConfig",
]
