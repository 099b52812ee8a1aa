"""Synthetic dataset generation with ground truth retained.

Each target series is assembled additively from its components: a local
trend integrated from a mean-reverting slope, a dummy-form seasonal effect
(pure noise during the first S - 1 warm-up rows, the sum-to-noise recursion
afterwards), a damped cycle pair, a static regression on candidate
predictors, and correlated observation noise. The exact recursions mirror
the component equations used by the state-space builder, so simulated data
and trained models agree structurally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .rng import RngStream, draw_mvnormal, draw_poisson
from .statespace import ModelSpec

_NOISE_KEYS = ("trend", "slope", "seasonal", "cycle")


@dataclass(frozen=True)
class PredictorSpec:
    """Distribution descriptor for one candidate predictor column."""

    kind: str
    params: tuple

    @classmethod
    def normal(cls, mean, sd):
        if not sd >= 0:
            raise ValidationError(f"normal predictor sd must be non-negative, got {sd}")
        return cls("normal", (float(mean), float(sd)))

    @classmethod
    def poisson(cls, rate):
        if not rate > 0:
            raise ValidationError(f"poisson predictor rate must be positive, got {rate}")
        return cls("poisson", (float(rate),))

    def draw(self, n, rng: RngStream):
        if self.kind == "normal":
            mean, sd = self.params
            return mean + sd * rng.standard_normal(n)
        if self.kind == "poisson":
            return draw_poisson(self.params[0], rng, size=n).astype(float)
        raise ValidationError(f"unknown predictor kind {self.kind!r}")

    def moments(self):
        """(mean, variance) of the declared law."""
        if self.kind == "normal":
            mean, sd = self.params
            return mean, sd * sd
        return self.params[0], self.params[0]

    def to_dict(self):
        if self.kind == "normal":
            return {"kind": "normal", "mean": self.params[0], "sd": self.params[1]}
        return {"kind": "poisson", "rate": self.params[0]}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "normal":
            return cls.normal(d["mean"], d["sd"])
        if kind == "poisson":
            return cls.poisson(d["rate"])
        raise ValidationError(f"unknown predictor kind {kind!r}")


def _resolve_noise_sd(noise_sd):
    if np.isscalar(noise_sd):
        value = float(noise_sd)
        if value < 0:
            raise ValidationError("component noise sd must be non-negative")
        return {k: value for k in _NOISE_KEYS}
    out = {}
    for k in _NOISE_KEYS:
        if k not in noise_sd:
            raise ValidationError(f"noise_sd mapping is missing component {k!r}")
        out[k] = float(noise_sd[k])
        if out[k] < 0:
            raise ValidationError(f"noise_sd[{k!r}] must be non-negative")
    return out


@dataclass
class SimConfig:
    """Everything needed to generate one dataset.

    ``B`` has one coefficient column per target series over the base
    predictor pool. With ``shared_pool`` the same realized predictor matrix
    is stacked once per series (so each series sees identical candidates at
    stacked offsets); otherwise each series gets its own independent draws
    of the pool.
    """

    n: int
    obs_cov: np.ndarray
    spec: ModelSpec
    B: np.ndarray
    predictors: tuple
    noise_sd: object = 0.5
    shared_pool: bool = True

    def __post_init__(self):
        self.obs_cov = np.atleast_2d(np.asarray(self.obs_cov, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.predictors = tuple(self.predictors)
        self.validate()

    def validate(self):
        if self.n < 1:
            raise ValidationError(f"sample size n must be positive, got {self.n}")
        m = self.spec.m
        if self.obs_cov.shape != (m, m):
            raise ValidationError(f"obs_cov must be {m}x{m}, got {self.obs_cov.shape}")
        try:
            np.linalg.cholesky(self.obs_cov)
        except np.linalg.LinAlgError:
            raise ValidationError("obs_cov must be symmetric positive definite") from None
        k = len(self.predictors)
        if k == 0:
            raise ValidationError("need at least one predictor descriptor")
        if self.B.shape != (k, m):
            raise ValidationError(f"B must be {k}x{m} (pool size x series), got {self.B.shape}")
        _resolve_noise_sd(self.noise_sd)

    @property
    def m(self):
        return self.spec.m

    @property
    def k(self):
        return len(self.predictors)

    @property
    def ki(self):
        """Cumulative stacked predictor boundaries, one entry per series."""
        return tuple(self.k * (i + 1) for i in range(self.m))

    def to_dict(self):
        return {
            "n": self.n,
            "obs_cov": self.obs_cov.tolist(),
            "model": self.spec.to_dict(),
            "B": self.B.tolist(),
            "predictors": [p.to_dict() for p in self.predictors],
            "noise_sd": self.noise_sd if np.isscalar(self.noise_sd) else dict(self.noise_sd),
            "shared_pool": self.shared_pool,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            n=int(d["n"]),
            obs_cov=d["obs_cov"],
            spec=ModelSpec.from_dict(d["model"]),
            B=d["B"],
            predictors=tuple(PredictorSpec.from_dict(p) for p in d["predictors"]),
            noise_sd=d.get("noise_sd", 0.5),
            shared_pool=bool(d.get("shared_pool", True)),
        )


@dataclass
class ComponentTruth:
    """Generating component paths and parameters, kept for verification."""

    trend: np.ndarray
    slope: np.ndarray
    seasonal: np.ndarray
    cycle: np.ndarray
    cycle_star: np.ndarray
    regression: np.ndarray
    errors: np.ndarray
    beta_stacked: np.ndarray


@dataclass
class SimOutput:
    """Simulated targets, stacked candidate predictors, and ground truth."""

    Y: np.ndarray
    X: np.ndarray
    ki: tuple
    truth: ComponentTruth
    config: SimConfig


def simulate_dataset(cfg: SimConfig, rng: RngStream) -> SimOutput:
    """Generate one dataset; Y equals the component sum cell for cell.

    Noise draw order is fixed and documented: per series trend then slope
    noise, then per series seasonal noise, then per series the cycle noise
    pair, then predictor columns (one pool, or one pool per series when not
    shared), then the observation error matrix.
    """
    cfg.validate()
    n, m, k = cfg.n, cfg.m, cfg.k
    spec = cfg.spec
    sd = _resolve_noise_sd(cfg.noise_sd)

    trend = np.zeros((n, m))
    slope = np.zeros((n, m))
    seasonal = np.zeros((n, m))
    cycle = np.zeros((n, m))
    cycle_star = np.zeros((n, m))

    for j in range(m):
        if spec.mu[j]:
            u = sd["trend"] * rng.standard_normal(n)
            v = sd["slope"] * rng.standard_normal(n) if spec.rho[j] != 0 else None
            for i in range(1, n):
                trend[i, j] = trend[i - 1, j] + slope[i - 1, j] + u[i]
                if v is not None:
                    slope[i, j] = spec.D[j] + spec.rho[j] * (slope[i - 1, j] - spec.D[j]) + v[i]

    for j in range(m):
        S = spec.S[j]
        if S:
            w = sd["seasonal"] * rng.standard_normal(n)
            for i in range(n):
                if i < S - 1:
                    seasonal[i, j] = w[i]
                else:
                    seasonal[i, j] = -seasonal[i - S + 1:i, j].sum() + w[i]

    for j in range(m):
        if spec.vrho[j] != 0:
            cl = spec.vrho[j] * math.cos(spec.lam[j])
            sl = spec.vrho[j] * math.sin(spec.lam[j])
            kap = sd["cycle"] * rng.standard_normal(n)
            kap_star = sd["cycle"] * rng.standard_normal(n)
            for i in range(1, n):
                cycle[i, j] = cl * cycle[i - 1, j] + sl * cycle_star[i - 1, j] + kap[i]
                cycle_star[i, j] = -sl * cycle[i - 1, j] + cl * cycle_star[i - 1, j] + kap_star[i]

    if cfg.shared_pool:
        base = np.column_stack([p.draw(n, rng) for p in cfg.predictors])
        pools = [base] * m
    else:
        pools = [np.column_stack([p.draw(n, rng) for p in cfg.predictors]) for _ in range(m)]

    regression = np.column_stack([pools[j] @ cfg.B[:, j] for j in range(m)])
    errors = draw_mvnormal(np.zeros(m), cfg.obs_cov, rng, size=n)
    Y = trend + seasonal + cycle + regression + errors

    X = np.column_stack(pools) if m > 1 else pools[0]
    beta_stacked = np.concatenate([cfg.B[:, j] for j in range(m)])
    truth = ComponentTruth(
        trend=trend, slope=slope, seasonal=seasonal, cycle=cycle, cycle_star=cycle_star,
        regression=regression, errors=errors, beta_stacked=beta_stacked,
    )
    return SimOutput(Y=Y, X=X, ki=cfg.ki, truth=truth, config=cfg)


def seasonal_recursion_check(path, S):
    """Implied seasonal noise sequence: path[t+1] + sum of the previous S-1 values.

    Zero residuals mean the path follows the seasonal recursion exactly;
    for a generated path the residuals recover the injected noise.
    """
    path = np.asarray(path, dtype=float).ravel()
    if S < 2:
        raise ValidationError(f"season count must be at least 2, got {S}")
    n = path.shape[0]
    if n <= S:
        raise ValidationError(f"path of length {n} is too short for S = {S}")
    csum = np.concatenate([[0.0], np.cumsum(path)])
    window = csum[S - 1:n] - csum[:n - S + 1]
    return path[S - 1:] + window


def dataset_column_names(m, K):
    return [f"Y{i + 1}" for i in range(m)] + [f"x{j + 1}" for j in range(K)]
