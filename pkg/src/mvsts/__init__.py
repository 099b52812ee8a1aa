"""Multivariate Bayesian structural time series.

Simulation of component-structured multivariate series, Gibbs-sampler
training with spike-and-slab feature selection, posterior reporting, and
multi-step forecasting.
"""

from .errors import NumericError, ValidationError
from .rng import (
    GENERATOR_ALGORITHM,
    RngStream,
    draw_inverse_gamma,
    draw_inverse_wishart,
    draw_mvnormal,
    draw_poisson,
)
from .statespace import (
    FilterResult,
    ModelSpec,
    StateSpaceSystem,
    build_state_space,
    kalman_filter,
    make_system,
    simulate_states,
    simulation_smoother,
    smooth,
)
from .simulate import (
    PredictorSpec,
    SimConfig,
    SimOutput,
    seasonal_recursion_check,
    simulate_dataset,
)
from .gibbs import (
    McmcDraws,
    PriorConfig,
    RegressionState,
    draw_beta,
    draw_component_variances,
    draw_sigma_eps,
    draw_states,
    ssvs_sweep,
    train,
)
from .forecast import ForecastResult, forecast, one_step_predictive_moments
from .report import (
    InclusionReport,
    ParameterEstimate,
    component_decomposition,
    emit_plots,
    error_metrics,
    inclusion_probabilities,
    parameter_estimates,
)
from . import presets

__version__ = "0.1.0"

__all__ = [
    "NumericError",
    "ValidationError",
    "GENERATOR_ALGORITHM",
    "RngStream",
    "draw_inverse_gamma",
    "draw_inverse_wishart",
    "draw_mvnormal",
    "draw_poisson",
    "FilterResult",
    "ModelSpec",
    "StateSpaceSystem",
    "build_state_space",
    "kalman_filter",
    "make_system",
    "simulate_states",
    "simulation_smoother",
    "smooth",
    "PredictorSpec",
    "SimConfig",
    "SimOutput",
    "seasonal_recursion_check",
    "simulate_dataset",
    "McmcDraws",
    "PriorConfig",
    "RegressionState",
    "draw_beta",
    "draw_component_variances",
    "draw_sigma_eps",
    "draw_states",
    "ssvs_sweep",
    "train",
    "ForecastResult",
    "forecast",
    "one_step_predictive_moments",
    "InclusionReport",
    "ParameterEstimate",
    "component_decomposition",
    "emit_plots",
    "error_metrics",
    "inclusion_probabilities",
    "parameter_estimates",
    "presets",
    "__version__",
]
