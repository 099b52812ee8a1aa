"""Seedable random sampling for every distribution the model needs.

All draws go through an :class:`RngStream`, a thin wrapper around numpy's
PCG64 generator keyed by ``(seed, stream_id)``. Identical keys reproduce
identical draw sequences bit for bit; distinct ``stream_id`` values give
statistically independent streams (one per MCMC chain). The generator
algorithm is recorded in :data:`GENERATOR_ALGORITHM` so run metadata can
pin it for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

GENERATOR_ALGORITHM = "numpy-pcg64/seedsequence"

# Asymmetry and negative-eigenvalue tolerances for covariance inputs.
SYMMETRY_TOL = 1e-10
EIGEN_FLOOR = -1e-10
# Below this eigenvalue a Cholesky failure falls back to an eigendecomposition
# instead of being treated as a real error.
EIGEN_FALLBACK = 1e-8


@dataclass
class RngStream:
    """A deterministic random stream identified by (seed, stream_id).

    Streams are stateful and must not be shared across concurrent chains;
    create one stream per chain with distinct ``stream_id`` values.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not isinstance(self.stream_id, (int, np.integer)) or self.stream_id < 0:
            raise ValidationError(f"stream_id must be a non-negative integer, got {self.stream_id!r}")
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, size=None):
        return self.generator.random(size)

    def permutation(self, n):
        return self.generator.permutation(n)


def _as_cov(cov, name="cov"):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {cov.shape}")
    scale = max(1.0, float(np.abs(cov).max()) if cov.size else 1.0)
    if cov.size and float(np.abs(cov - cov.T).max()) > SYMMETRY_TOL * scale:
        raise ValidationError(f"{name} is not symmetric within tolerance {SYMMETRY_TOL}")
    return 0.5 * (cov + cov.T)


def cov_factor(cov, name="cov"):
    """Return a matrix L with L @ L.T == cov, for symmetric PSD cov.

    Cholesky when the matrix is numerically positive definite; otherwise an
    eigendecomposition with tiny negative eigenvalues (>= -1e-10, scaled)
    clipped to zero. Indefinite input is rejected.
    """
    cov = _as_cov(cov, name)
    if cov.size == 0:
        return cov
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    scale = max(1.0, float(np.abs(cov).max()))
    w, v = np.linalg.eigh(cov)
    if w.min() < EIGEN_FLOOR * scale:
        raise ValidationError(
            f"{name} is not positive semidefinite (min eigenvalue {w.min():.3e})"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


def draw_mvnormal(mean, cov, rng: RngStream, size=None):
    """Draw from N(mean, cov), allowing semidefinite covariance.

    Returns a vector of length m, or an array of shape (size, m).
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    factor = cov_factor(cov)
    if factor.shape[0] != mean.shape[0]:
        raise ValidationError(
            f"mean has length {mean.shape[0]} but cov is {factor.shape[0]}x{factor.shape[0]}"
        )
    m = mean.shape[0]
    if size is None:
        z = rng.standard_normal(m)
        return mean + factor @ z
    z = rng.standard_normal((int(size), m))
    return mean + z @ factor.T


def draw_inverse_gamma(shape, scale, rng: RngStream, size=None):
    """Inverse-gamma draw with density proportional to x^(-shape-1) exp(-scale/x).

    Equivalently the reciprocal of a gamma(shape, rate=scale) draw. The
    shape-scale convention matches the posterior updates used by the trainer
    (shape += n/2, scale += SSE/2).
    """
    if not shape > 0 or not scale > 0:
        raise ValidationError(f"inverse-gamma needs shape > 0 and scale > 0, got ({shape}, {scale})")
    g = rng.generator.gamma(shape, 1.0 / scale, size=size)
    # Tiny shapes can underflow gamma draws to zero; keep the reciprocal finite.
    g = np.maximum(g, 1.0 / np.finfo(float).max)
    return 1.0 / g


def draw_inverse_wishart(df, scale, rng: RngStream, size=None):
    """Inverse-Wishart draw(s) via the Bartlett decomposition.

    ``scale`` is the inverse-Wishart scale matrix: the mean of the
    distribution is scale / (df - m - 1) when df > m + 1. Returns an (m, m)
    matrix or a (size, m, m) array; every draw is symmetric positive definite.
    """
    scale = _as_cov(scale, "scale")
    m = scale.shape[0]
    if not df > m - 1:
        raise ValidationError(f"inverse-Wishart df must exceed m - 1 = {m - 1}, got {df}")
    try:
        lam = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError:
        raise ValidationError("inverse-Wishart scale matrix must be positive definite") from None

    k = 1 if size is None else int(size)
    # Bartlett factor A: lower triangular, A_ii^2 ~ chi2(df - i), A_ij ~ N(0,1).
    a = np.zeros((k, m, m))
    for i in range(m):
        a[:, i, i] = np.sqrt(rng.generator.chisquare(df - i, size=k))
    if m > 1:
        tril = np.tril_indices(m, k=-1)
        a[:, tril[0], tril[1]] = rng.standard_normal((k, len(tril[0])))
    # If X = inv(lam).T A A.T inv(lam) ~ Wishart(df, inv(scale)), then
    # X^-1 = (lam A^-T)(lam A^-T).T ~ IW(df, scale).
    t = lam[None, :, :] @ np.linalg.inv(a).transpose(0, 2, 1)
    draws = t @ t.transpose(0, 2, 1)
    return draws[0] if size is None else draws


def draw_poisson(rate, rng: RngStream, size=None):
    """Standard Poisson draw(s) with the given positive rate."""
    if not np.isfinite(rate) or not rate > 0:
        raise ValidationError(f"Poisson rate must be positive and finite, got {rate}")
    return rng.generator.poisson(rate, size=size)
