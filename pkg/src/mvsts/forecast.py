"""Posterior predictive forecasting by draw-by-draw forward simulation.

Each retained MCMC draw contributes one trajectory: starting from that
draw's final latent state, the state recursion is advanced with the draw's
component variances, the regression term is added from the new predictor
rows and the draw's coefficients, and observation noise is added from the
draw's covariance. The point forecast is the average over draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gibbs import McmcDraws
from .rng import RngStream, cov_factor
from .statespace import StateSpaceSystem


@dataclass
class ForecastResult:
    """Predictive draws [steps, m, n_keep] and their per-cell mean [steps, m]."""

    pred_distribution: np.ndarray
    pred_mean: np.ndarray

    @property
    def steps(self):
        return self.pred_mean.shape[0]


def _check_template(draws: McmcDraws, sys: StateSpaceSystem):
    if sys.spec != draws.spec:
        raise ValidationError("system template was built from a different model spec than the draws")
    if sys.p != draws.final_states.shape[0] or sys.r != draws.st_sig2.shape[0]:
        raise ValidationError("system template dimensions do not match the stored draws")


def _regression_rows(newdata, ki, beta):
    bounds = (0,) + tuple(ki)
    out = np.empty((newdata.shape[0], len(ki)))
    for i in range(len(ki)):
        sl = slice(bounds[i], bounds[i + 1])
        out[:, i] = newdata[:, sl] @ beta[sl]
    return out


def forecast(draws: McmcDraws, sys_template: StateSpaceSystem, newdata, steps,
             rng: RngStream) -> ForecastResult:
    """Simulate the posterior predictive distribution ``steps`` ahead.

    ``newdata`` holds the future predictor rows in the training column
    layout (per-series blocks at the ki boundaries), one row per step.
    With steps = 0 the result is empty and no randomness is consumed.
    Per retained draw the stream supplies steps x r state-noise normals
    followed by steps x m observation-noise normals.
    """
    steps = int(steps)
    if steps < 0:
        raise ValidationError(f"steps must be non-negative, got {steps}")
    if draws.n_keep < 1:
        raise ValidationError("draws container is empty")
    _check_template(draws, sys_template)
    m = draws.mtrain
    if steps == 0:
        empty = np.zeros((0, m, draws.n_keep))
        return ForecastResult(pred_distribution=empty, pred_mean=np.zeros((0, m)))

    newdata = np.asarray(newdata, dtype=float)
    if newdata.ndim != 2 or newdata.shape != (steps, draws.ki[-1]):
        raise ValidationError(
            f"newdata must be {steps}x{draws.ki[-1]} (steps x stacked predictors), got {newdata.shape}"
        )
    if not np.all(np.isfinite(newdata)):
        raise ValidationError("newdata contains non-finite values")

    Z, T, R, c = sys_template.Z, sys_template.T, sys_template.R, sys_template.c
    r = sys_template.r
    pred = np.empty((steps, m, draws.n_keep))
    for d in range(draws.n_keep):
        alpha = draws.final_states[:, d].copy()
        scale = np.sqrt(draws.st_sig2[:, d])
        Le = cov_factor(draws.ob_sig2[:, :, d], "observation covariance draw")
        xi = _regression_rows(newdata, draws.ki, draws.beta_hat[:, d])
        zs = rng.standard_normal((steps, r))
        ze = rng.standard_normal((steps, m))
        for s in range(steps):
            alpha = c + T @ alpha + R @ (scale * zs[s])
            pred[s, :, d] = Z @ alpha + xi[s] + Le @ ze[s]
    return ForecastResult(pred_distribution=pred, pred_mean=pred.mean(axis=2))


def one_step_predictive_moments(draws: McmcDraws, sys_template: StateSpaceSystem,
                                draw_index, newdata_row):
    """Analytic one-step-ahead mean and covariance for a single draw.

    The mean advances the draw's final state one transition and adds the
    regression term; the covariance collects each series' own component
    noise (through the observation map) plus the observation covariance.
    """
    _check_template(draws, sys_template)
    d = int(draw_index)
    if not 0 <= d < draws.n_keep:
        raise ValidationError(f"draw index {d} out of range [0, {draws.n_keep})")
    row = np.asarray(newdata_row, dtype=float).reshape(-1)
    if row.shape != (draws.ki[-1],):
        raise ValidationError(f"newdata row must have {draws.ki[-1]} entries, got {row.shape}")
    Z, T, R, c = sys_template.Z, sys_template.T, sys_template.R, sys_template.c
    alpha = draws.final_states[:, d]
    xi = _regression_rows(row[None, :], draws.ki, draws.beta_hat[:, d])[0]
    mean = Z @ (c + T @ alpha) + xi
    ZR = Z @ R
    cov = (ZR * draws.st_sig2[:, d]) @ ZR.T + draws.ob_sig2[:, :, d]
    return mean, cov
