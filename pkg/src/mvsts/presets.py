"""Bundled two-series demo study.

Two correlated targets: series 1 carries a trend and a 12-season effect,
series 2 a trend and a slow damped cycle; both regress on the same pool of
8 candidate predictors (stacked twice, so 16 candidates total), of which 5
are active for series 1 and 6 for series 2. Used by the demos, the CLI demo
config, and the acceptance suite.
"""

from __future__ import annotations

import math

import numpy as np

from .gibbs import PriorConfig
from .simulate import PredictorSpec, SimConfig
from .statespace import ModelSpec

#: stacked true coefficients (series 1 block then series 2 block)
TRUE_B = np.array([
    [2.0, -1.5],
    [0.0, 4.0],
    [2.5, 0.0],
    [0.0, 2.5],
    [1.5, -1.0],
    [-2.0, 0.0],
    [0.0, -3.0],
    [3.5, 0.5],
])

#: 1-based stacked indices of the truly nonzero coefficients
TRUE_INDEX = (1, 3, 5, 6, 8, 9, 10, 12, 13, 15, 16)

DEFAULT_TRAIN = {"mc": 600, "burn": 200, "train_rows": 500, "steps": 5, "threshold": 0.8}


def demo_model_spec() -> ModelSpec:
    return ModelSpec.of(
        mu=(1, 1), rho=(0.6, 0.8), D=(1.0, 0.5), S=(12, 0),
        vrho=(0.0, 0.99), lam=(0.0, math.pi / 50),
    )


def demo_sim_config(n=505) -> SimConfig:
    return SimConfig(
        n=n,
        obs_cov=np.array([[1.1, 0.7], [0.7, 0.9]]),
        spec=demo_model_spec(),
        B=TRUE_B,
        predictors=(
            PredictorSpec.normal(5.0, 25.0),
            PredictorSpec.poisson(10.0),
            PredictorSpec.poisson(5.0),
            PredictorSpec.normal(-2.0, 5.0),
            PredictorSpec.normal(-5.0, 25.0),
            PredictorSpec.poisson(15.0),
            PredictorSpec.poisson(20.0),
            PredictorSpec.normal(0.0, 100.0),
        ),
        noise_sd=0.5,
        shared_pool=True,
    )


def demo_prior() -> PriorConfig:
    return PriorConfig(ki=(8, 16), v0=5.0, pii=0.5)


def true_nonzero_coefficients() -> np.ndarray:
    """True values at TRUE_INDEX, in ascending stacked order."""
    stacked = np.concatenate([TRUE_B[:, 0], TRUE_B[:, 1]])
    return stacked[np.asarray(TRUE_INDEX) - 1]
