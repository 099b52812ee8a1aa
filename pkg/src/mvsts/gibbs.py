"""Gibbs sampler: latent states, component variances, spike-and-slab
indicator/coefficient draws, and the observation covariance.

One iteration performs, in order:

1. draw the latent state path given current variances and coefficients,
2. draw every component variance from its inverse-gamma conditional,
3. recompute the component-adjusted targets and sweep the inclusion
   indicators in a fresh random order (coefficients integrated out),
4. draw the active coefficients from their Gaussian conditional,
5. draw the observation covariance from its inverse-Wishart conditional.

Draws after the burn-in are retained in an :class:`McmcDraws` container.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import NumericError, ValidationError
from .rng import RngStream, cov_factor, draw_inverse_gamma, draw_inverse_wishart, GENERATOR_ALGORITHM
from .statespace import ModelSpec, StateSpaceSystem, build_state_space, simulation_smoother


@dataclass
class PriorConfig:
    """Spike, slab, and component-variance prior settings.

    ``ki`` holds cumulative stacked predictor counts per series (for two
    series with 8 candidates each: (8, 16)). ``pii`` is the prior inclusion
    probability per stacked predictor (scalar broadcasts); entries of 0 or 1
    force exclusion or inclusion. The slab is N(b, ((kapp/n) X'X)^-1) on the
    active coefficients, and the observation covariance gets an
    inverse-Wishart prior anchored at the training-target covariance scaled
    by (v0 - m - 1)(1 - R2). Component variances share an IG(v/2, ss/2)
    prior. ``target_cov`` overrides the covariance anchor when set.
    """

    ki: tuple
    v0: float
    pii: object = 0.5
    b: object = None
    kapp: float = 0.01
    R2: float = 0.8
    v: float = 0.01
    ss: float = 0.01
    target_cov: object = None

    def __post_init__(self):
        self.ki = tuple(int(x) for x in np.atleast_1d(self.ki))

    @property
    def K(self):
        return self.ki[-1]

    def validate(self, m=None):
        if not self.ki or any(b <= a for a, b in zip((0,) + self.ki, self.ki)):
            raise ValidationError(f"ki must be strictly increasing and positive, got {self.ki}")
        if m is not None and len(self.ki) != m:
            raise ValidationError(f"ki has {len(self.ki)} entries but there are {m} series")
        pii = self.pii_vector()
        if np.any(pii < 0) or np.any(pii > 1):
            raise ValidationError("prior inclusion probabilities must lie in [0, 1]")
        mm = len(self.ki) if m is None else m
        if not self.v0 > mm + 1:
            raise ValidationError(f"v0 must exceed m + 1 = {mm + 1}, got {self.v0}")
        if not 0 < self.R2 < 1:
            raise ValidationError(f"R2 must lie in (0, 1), got {self.R2}")
        if not self.kapp > 0:
            raise ValidationError(f"kapp must be positive, got {self.kapp}")
        if not (self.v > 0 and self.ss > 0):
            raise ValidationError("component variance prior needs v > 0 and ss > 0")
        self.b_vector()

    def pii_vector(self):
        pii = np.asarray(self.pii, dtype=float)
        if pii.ndim == 0:
            return np.full(self.K, float(pii))
        if pii.shape != (self.K,):
            raise ValidationError(f"pii must be scalar or length {self.K}, got shape {pii.shape}")
        return pii.copy()

    def b_vector(self):
        if self.b is None:
            return np.zeros(self.K)
        b = np.asarray(self.b, dtype=float)
        if b.shape != (self.K,):
            raise ValidationError(f"b must have length {self.K}, got shape {b.shape}")
        return b.copy()

    def to_dict(self):
        pii = self.pii if np.isscalar(self.pii) else np.asarray(self.pii).tolist()
        b = None if self.b is None else np.asarray(self.b).tolist()
        tc = None if self.target_cov is None else np.asarray(self.target_cov).tolist()
        return {"ki": list(self.ki), "v0": self.v0, "pii": pii, "b": b, "kapp": self.kapp,
                "R2": self.R2, "v": self.v, "ss": self.ss, "target_cov": tc}

    @classmethod
    def from_dict(cls, d):
        return cls(ki=tuple(d["ki"]), v0=float(d["v0"]), pii=d.get("pii", 0.5), b=d.get("b"),
                   kapp=float(d.get("kapp", 0.01)), R2=float(d.get("R2", 0.8)),
                   v=float(d.get("v", 0.01)), ss=float(d.get("ss", 0.01)),
                   target_cov=d.get("target_cov"))


@dataclass
class RegressionState:
    """Mutable regression bookkeeping shared by the sweep and draw steps.

    The stacked design is never materialized: per-series blocks of the
    n x K predictor matrix are addressed through ``ki``, and all sweep
    algebra runs on the cached K x K Gram matrix.
    """

    X: np.ndarray
    ki: tuple
    Ystar: np.ndarray
    target_cov: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    series_of: np.ndarray = field(init=False)
    gram: np.ndarray = field(init=False)
    _same_series: np.ndarray = field(init=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Ystar = np.asarray(self.Ystar, dtype=float)
        K = self.X.shape[1]
        if self.ki[-1] != K:
            raise ValidationError(f"X has {K} columns but ki ends at {self.ki[-1]}")
        bounds = (0,) + tuple(self.ki)
        self.series_of = np.empty(K, dtype=int)
        for i in range(len(self.ki)):
            self.series_of[bounds[i]:bounds[i + 1]] = i
        self.gram = self.X.T @ self.X
        self._same_series = self.series_of[:, None] == self.series_of[None, :]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def K(self):
        return self.X.shape[1]

    @property
    def m(self):
        return len(self.ki)

    def set_ystar(self, ystar):
        ystar = np.asarray(ystar, dtype=float)
        if ystar.shape != (self.n, self.m):
            raise ValidationError(f"Ystar must be {self.n}x{self.m}, got {ystar.shape}")
        self.Ystar = ystar

    def fitted(self, beta=None):
        """Per-series regression fit X_i beta_i, shape [n, m]."""
        beta = self.beta if beta is None else np.asarray(beta, dtype=float)
        bounds = (0,) + tuple(self.ki)
        out = np.empty((self.n, self.m))
        for i in range(self.m):
            sl = slice(bounds[i], bounds[i + 1])
            out[:, i] = self.X[:, sl] @ beta[sl]
        return out

    def weights(self, sigma_eps, kapp):
        """(W, A, q): data precision, prior precision, and data score.

        W[a, b] = sigma_inv[series(a), series(b)] * gram[a, b] is the Gram of
        the stacked block design under the observation precision; A is the
        slab prior precision (kapp/n scaled, block diagonal); q is
        X' (sigma_inv kron I) vec(Ystar).
        """
        sigma_inv = np.linalg.inv(np.atleast_2d(sigma_eps))
        W = sigma_inv[np.ix_(self.series_of, self.series_of)] * self.gram
        A = (kapp / self.n) * np.where(self._same_series, self.gram, 0.0)
        xty = self.X.T @ self.Ystar
        q = (xty * sigma_inv[self.series_of, :]).sum(axis=1)
        return W, A, q


def _marginal_score(idx, W, A, rhs, b):
    """Log marginal likelihood of the active set, up to gamma-free constants.

    Returns -inf when the active Gram (hence the slab precision) is
    singular, rejecting the candidate instead of crashing.
    """
    if idx.size == 0:
        return 0.0
    sub = np.ix_(idx, idx)
    A_g = A[sub]
    sign, ld_a = np.linalg.slogdet(A_g)
    if sign <= 0 or not np.isfinite(ld_a):
        return -math.inf
    try:
        cf = cho_factor(W[sub] + A_g, lower=True)
    except np.linalg.LinAlgError:
        return -math.inf
    ld_vinv = 2.0 * np.log(np.diag(cf[0])).sum()
    r = rhs[idx]
    quad = float(r @ cho_solve(cf, r))
    pen = float(b[idx] @ A_g @ b[idx])
    return 0.5 * (ld_a - ld_vinv + quad - pen)


def ssvs_sweep(reg: RegressionState, sigma_eps, prior: PriorConfig, rng: RngStream, order=None):
    """One stochastic-search sweep over all inclusion indicators.

    Visits stacked indices in a fresh uniform permutation (or the supplied
    ``order``) and resamples each indicator from its conditional with the
    coefficients integrated out under the slab prior. Prior probabilities of
    exactly 0 or 1 force the indicator. Updates ``reg.gamma`` in place and
    returns it.
    """
    pii = prior.pii_vector()
    b = prior.b_vector()
    W, A, q = reg.weights(sigma_eps, prior.kapp)
    rhs = q + A @ b
    gamma = reg.gamma.astype(np.int8).copy()
    if order is None:
        order = rng.permutation(reg.K)
    else:
        order = np.asarray(order, dtype=int)
        if sorted(order.tolist()) != list(range(reg.K)):
            raise ValidationError("order must be a permutation of all stacked indices")

    for j in order:
        if pii[j] <= 0.0:
            gamma[j] = 0
            continue
        if pii[j] >= 1.0:
            gamma[j] = 1
            continue
        gamma[j] = 1
        s1 = _marginal_score(np.flatnonzero(gamma), W, A, rhs, b)
        gamma[j] = 0
        s0 = _marginal_score(np.flatnonzero(gamma), W, A, rhs, b)
        if s1 == -math.inf and s0 == -math.inf:
            gamma[j] = 0
            continue
        if s1 == -math.inf:
            p1 = 0.0
        elif s0 == -math.inf:
            p1 = 1.0
        else:
            logodds = (s1 - s0) + math.log(pii[j]) - math.log1p(-pii[j])
            p1 = 1.0 / (1.0 + math.exp(-min(max(logodds, -700.0), 700.0)))
        gamma[j] = 1 if rng.uniform() < p1 else 0

    reg.gamma = gamma
    return gamma


def draw_beta(reg: RegressionState, sigma_eps, prior: PriorConfig, rng: RngStream):
    """Draw coefficients for the active set; inactive entries are exactly zero."""
    beta = np.zeros(reg.K)
    idx = np.flatnonzero(reg.gamma)
    if idx.size:
        b = prior.b_vector()
        W, A, q = reg.weights(sigma_eps, prior.kapp)
        sub = np.ix_(idx, idx)
        try:
            cf = cho_factor(W[sub] + A[sub], lower=True)
        except np.linalg.LinAlgError:
            raise NumericError(
                f"posterior precision is singular for active set {idx.tolist()}",
                gamma=reg.gamma.copy(),
            ) from None
        rhs = q[idx] + (A @ b)[idx]
        mu = cho_solve(cf, rhs)
        L = np.tril(cf[0])
        z = rng.standard_normal(idx.size)
        beta[idx] = mu + solve_triangular(L.T, z, lower=False)
    reg.beta = beta
    return beta


def draw_sigma_eps(reg: RegressionState, prior: PriorConfig, rng: RngStream):
    """Inverse-Wishart conditional for the observation covariance."""
    m = reg.m
    E = reg.Ystar - reg.fitted()
    v0 = float(prior.v0)
    anchor = reg.target_cov if prior.target_cov is None else np.atleast_2d(np.asarray(prior.target_cov, dtype=float))
    V0 = (v0 - m - 1.0) * (1.0 - prior.R2) * anchor
    return draw_inverse_wishart(v0 + reg.n, V0 + E.T @ E, rng)


def draw_states(sys: StateSpaceSystem, Y, offset, rng: RngStream):
    """Posterior draw of the latent state path given current parameters.

    ``offset`` carries the per-series regression fit subtracted from Y.
    """
    return simulation_smoother(sys, Y, offset, rng)


def draw_component_variances(states, sys: StateSpaceSystem, prior: PriorConfig, rng: RngStream):
    """Inverse-gamma draws for every error-bearing state, in slot order.

    Innovations are the one-step transition residuals of the drawn path at
    the error-bearing positions (level: next minus level minus slope; slope:
    deviation from the mean-reverting update; seasonal: next effect plus the
    previous S-1 effects; cycle: residuals of the damped rotation). Each slot
    gets variance ~ IG(v/2 + (n-1)/2, ss/2 + SSE/2).
    """
    states = np.asarray(states, dtype=float)
    if sys.r == 0:
        return np.zeros(0)
    resid = states[1:] - sys.c - states[:-1] @ sys.T.T
    eta = resid[:, sys.error_positions]
    neff = eta.shape[0]
    sse = (eta * eta).sum(axis=0)
    out = np.empty(sys.r)
    for k2 in range(sys.r):
        out[k2] = draw_inverse_gamma(prior.v / 2.0 + neff / 2.0, prior.ss / 2.0 + sse[k2] / 2.0, rng)
    return out


@dataclass
class McmcDraws:
    """Retained posterior draws plus the bookkeeping needed to reuse them.

    Shapes: Ind and beta_hat are [K, n_keep]; ob_sig2 is [m, m, n_keep];
    st_sig2 is [r, n_keep]; States holds per-series component signals
    [n, n_signals, n_keep] (None when retention was disabled); residuals are
    the observation-error draws [n, m, n_keep]; final_states stores each
    draw's last full state vector [p, n_keep] for forecasting.
    """

    Ind: np.ndarray
    beta_hat: np.ndarray
    ob_sig2: np.ndarray
    st_sig2: np.ndarray
    States: object
    residuals: np.ndarray
    final_states: np.ndarray
    ki: tuple
    ntrain: int
    mtrain: int
    spec: ModelSpec
    signal_labels: tuple
    slot_labels: tuple
    seed_info: dict | None = None

    @property
    def n_keep(self):
        return self.Ind.shape[1]

    @property
    def K(self):
        return self.Ind.shape[0]


def train(Y, X, spec: ModelSpec, prior: PriorConfig, mc, burn, rng: RngStream,
          keep_states=True) -> McmcDraws:
    """Run the full Gibbs sampler and retain draws after the burn-in.

    Y is [n, m]; X is the [n, K] column-stacked candidate predictor matrix
    with per-series blocks at the ``prior.ki`` boundaries. The trend, slope,
    seasonal, and cycle hyperparameters in ``spec`` are fixed inputs, not
    sampled.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValidationError(f"Y must be a 2-d array, got shape {Y.shape}")
    n, m = Y.shape
    if n < 2:
        raise ValidationError("need at least two training rows")
    if not np.all(np.isfinite(Y)):
        raise ValidationError("Y contains non-finite values")
    if spec.m != m:
        raise ValidationError(f"model spec covers {spec.m} series but Y has {m}")
    prior.validate(m)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape != (n, prior.K):
        raise ValidationError(f"X must be {n}x{prior.K}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("X contains non-finite values")
    mc, burn = int(mc), int(burn)
    if mc < 1 or burn < 0 or burn >= mc:
        raise ValidationError(f"need 0 <= burn < mc, got burn={burn}, mc={mc}")

    target_cov = np.atleast_2d(np.cov(Y.T, ddof=1))
    pii = prior.pii_vector()
    reg = RegressionState(
        X=X, ki=prior.ki, Ystar=Y.copy(), target_cov=target_cov,
        gamma=(pii > 0).astype(np.int8), beta=np.zeros(prior.K),
    )

    sys0 = build_state_space(spec, obs_cov=target_cov)
    p, r = sys0.p, sys0.r
    sig2 = np.full(r, 0.01)
    sigma_eps = target_cov.copy()
    n_keep = mc - burn
    q_sig = len(sys0.signal_labels)

    Ind = np.empty((prior.K, n_keep), dtype=np.int8)
    beta_hat = np.empty((prior.K, n_keep))
    ob_sig2 = np.empty((m, m, n_keep))
    st_sig2 = np.empty((r, n_keep))
    States = np.empty((n, q_sig, n_keep)) if keep_states else None
    residuals = np.empty((n, m, n_keep))
    final_states = np.empty((p, n_keep))

    for it in range(mc):
        sys_cur = sys0.with_variances(sig2, sigma_eps)
        offset = reg.fitted()
        states = draw_states(sys_cur, Y, offset, rng)
        sig2 = draw_component_variances(states, sys_cur, prior, rng)
        reg.set_ystar(Y - states @ sys0.Z.T)
        gamma = ssvs_sweep(reg, sigma_eps, prior, rng)
        beta = draw_beta(reg, sigma_eps, prior, rng)
        sigma_eps = draw_sigma_eps(reg, prior, rng)
        if it >= burn:
            k = it - burn
            Ind[:, k] = gamma
            beta_hat[:, k] = beta
            ob_sig2[:, :, k] = sigma_eps
            st_sig2[:, k] = sig2
            if keep_states:
                States[:, :, k] = sys0.extract_signals(states)
            residuals[:, :, k] = reg.Ystar - reg.fitted()
            final_states[:, k] = states[-1]

    return McmcDraws(
        Ind=Ind, beta_hat=beta_hat, ob_sig2=ob_sig2, st_sig2=st_sig2, States=States,
        residuals=residuals, final_states=final_states, ki=prior.ki, ntrain=n, mtrain=m,
        spec=spec, signal_labels=sys0.signal_labels, slot_labels=sys0.slot_labels,
        seed_info={"seed": rng.seed, "stream_id": rng.stream_id, "algorithm": GENERATOR_ALGORITHM},
    )
