"""Linear-Gaussian state-space machinery for component-structured series.

A model is a sum, per target series, of optional components: a local trend
whose slope is pulled toward a long-term level, a dummy-form seasonal block,
and a damped stochastic cycle pair. :func:`build_state_space` stacks the
per-series blocks into one system; :func:`kalman_filter`, :func:`smooth` and
:func:`simulation_smoother` operate on it.

State transition convention: alpha[t+1] = c + T @ alpha[t] + R @ eta[t],
observation y[t] = Z @ alpha[t] + eps[t]. The constant vector ``c`` carries
the slope's affine pull D * (1 - rho); all other rows of ``c`` are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericError, ValidationError
from .rng import RngStream, cov_factor, draw_mvnormal

# Large-variance stand-in for exact diffuse initialization. The filter's
# loglik discards the first (number of diffuse states) time points.
DIFFUSE_SCALE = 1e7

# Default initialization variances for state errors / observation errors.
DEFAULT_STATE_VARIANCE = 0.01
DEFAULT_OBS_VARIANCE = 0.1


@dataclass(frozen=True)
class ModelSpec:
    """Per-series component switches and fixed hyperparameters.

    mu turns the trend level on; rho is the slope learning rate (rho != 0
    adds a slope state and requires mu = 1); D is the long-term slope level;
    S is the season count (0 = none, else >= 2); vrho is the cycle damping
    factor in [0, 1) (0 = no cycle); lam is the cycle frequency in (0, pi)
    when vrho > 0.
    """

    mu: tuple
    rho: tuple
    D: tuple
    S: tuple
    vrho: tuple
    lam: tuple

    @classmethod
    def of(cls, mu, rho, D, S, vrho, lam):
        spec = cls(
            mu=tuple(int(v) for v in np.atleast_1d(mu)),
            rho=tuple(float(v) for v in np.atleast_1d(rho)),
            D=tuple(float(v) for v in np.atleast_1d(D)),
            S=tuple(int(v) for v in np.atleast_1d(S)),
            vrho=tuple(float(v) for v in np.atleast_1d(vrho)),
            lam=tuple(float(v) for v in np.atleast_1d(lam)),
        )
        spec.validate()
        return spec

    @property
    def m(self):
        return len(self.mu)

    def validate(self):
        lengths = {len(self.mu), len(self.rho), len(self.D), len(self.S), len(self.vrho), len(self.lam)}
        if len(lengths) != 1 or not self.mu:
            raise ValidationError("all component parameter vectors must share one nonzero length")
        for i in range(self.m):
            if self.mu[i] not in (0, 1):
                raise ValidationError(f"series {i}: trend switch mu must be 0 or 1, got {self.mu[i]}")
            if not 0.0 <= self.rho[i] <= 1.0:
                raise ValidationError(f"series {i}: slope learning rate rho must be in [0, 1], got {self.rho[i]}")
            if self.rho[i] != 0 and self.mu[i] != 1:
                raise ValidationError(f"series {i}: slope (rho != 0) requires the trend switch mu = 1")
            if self.S[i] < 0 or self.S[i] == 1:
                raise ValidationError(f"series {i}: season count S must be 0 or at least 2, got {self.S[i]}")
            if not 0.0 <= self.vrho[i] < 1.0:
                raise ValidationError(f"series {i}: cycle damping vrho must be in [0, 1), got {self.vrho[i]}")
            if self.vrho[i] != 0 and not 0.0 < self.lam[i] < math.pi:
                raise ValidationError(
                    f"series {i}: cycle frequency lambda must be in (0, pi) when vrho > 0, got {self.lam[i]}"
                )

    @property
    def state_dim(self):
        """Total number of latent states across all series."""
        return sum(
            self.mu[i] + (self.rho[i] != 0) + max(self.S[i] - 1, 0) + 2 * (self.vrho[i] != 0)
            for i in range(self.m)
        )

    @property
    def error_dim(self):
        """Number of error-bearing latent states."""
        return sum(
            self.mu[i] + (self.rho[i] != 0) + (self.S[i] != 0) + 2 * (self.vrho[i] != 0)
            for i in range(self.m)
        )

    def to_dict(self):
        return {
            "mu": list(self.mu),
            "rho": list(self.rho),
            "D": list(self.D),
            "S": list(self.S),
            "vrho": list(self.vrho),
            "lambda": list(self.lam),
        }

    @classmethod
    def from_dict(cls, d):
        return cls.of(d["mu"], d["rho"], d["D"], d["S"], d["vrho"], d["lambda"])


@dataclass(frozen=True)
class SeriesLayout:
    """State-index bookkeeping for one series (internal)."""

    series: int
    level: int | None
    slope: int | None
    seasonal: tuple[int, int] | None  # (first state index, S - 1)
    cycle: tuple[int, int] | None     # (omega index, omega_star index)


@dataclass(frozen=True)
class StateSpaceSystem:
    """Stacked system matrices plus initialization and index bookkeeping."""

    spec: ModelSpec
    Z: np.ndarray
    T: np.ndarray
    R: np.ndarray
    c: np.ndarray
    Qt: np.ndarray
    Ht: np.ndarray
    a1: np.ndarray
    P1: np.ndarray
    P1inf: np.ndarray
    layouts: tuple
    state_labels: tuple
    slot_labels: tuple
    error_positions: np.ndarray

    @property
    def p(self):
        return self.T.shape[0]

    @property
    def r(self):
        return self.R.shape[1]

    @property
    def m(self):
        return self.Z.shape[0]

    def with_variances(self, state_variances, obs_cov):
        """Same structure with new state-error variances and observation covariance."""
        q = np.asarray(state_variances, dtype=float)
        if q.shape != (self.r,):
            raise ValidationError(f"expected {self.r} state variances, got shape {q.shape}")
        h = np.asarray(obs_cov, dtype=float)
        if h.shape != (self.m, self.m):
            raise ValidationError(f"observation covariance must be {self.m}x{self.m}, got {h.shape}")
        return replace(self, Qt=np.diag(q), Ht=h)

    @property
    def signal_labels(self):
        """(series, component) labels for per-series component signals, in order."""
        labels = []
        for lay in self.layouts:
            if lay.level is not None:
                labels.append((lay.series, "trend"))
            if lay.slope is not None:
                labels.append((lay.series, "slope"))
            if lay.seasonal is not None:
                labels.append((lay.series, "seasonal"))
            if lay.cycle is not None:
                labels.append((lay.series, "cycle"))
        return tuple(labels)

    def extract_signals(self, states):
        """Map a state path [n, p] to component signals [n, n_signals].

        Signals are the level, slope, current seasonal effect, and current
        cycle value per series, ordered as :attr:`signal_labels`.
        """
        states = np.asarray(states, dtype=float)
        cols = []
        for lay in self.layouts:
            if lay.level is not None:
                cols.append(states[:, lay.level])
            if lay.slope is not None:
                cols.append(states[:, lay.slope])
            if lay.seasonal is not None:
                cols.append(states[:, lay.seasonal[0]])
            if lay.cycle is not None:
                cols.append(states[:, lay.cycle[0]])
        if not cols:
            return np.zeros((states.shape[0], 0))
        return np.column_stack(cols)


def _broadcast_variances(values, count, default, what):
    if values is None:
        return np.full(count, default, dtype=float)
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 1:
        arr = np.full(count, float(arr[0]))
    if arr.shape != (count,):
        raise ValidationError(f"expected {count} {what} variances, got shape {arr.shape}")
    if np.any(arr < 0):
        raise ValidationError(f"{what} variances must be non-negative")
    return arr


def build_state_space(spec: ModelSpec, trend_variances=None, seasonal_variances=None,
                      cycle_variances=None, obs_cov=None) -> StateSpaceSystem:
    """Assemble the stacked system from per-series component choices.

    Per-series state order is (level, slope, seasonal dummies, cycle pair);
    series are laid out one after another. ``trend_variances`` supplies the
    level then slope error variances series by series; ``cycle_variances``
    accepts either one value per cycle (shared by the pair) or two. Defaults
    are 0.01 for state errors and 0.1 * I for the observation covariance;
    these are initialization values that the trainer overwrites.
    """
    spec.validate()
    m = spec.m
    p = spec.state_dim
    r = spec.error_dim

    layouts = []
    state_labels = []
    slot_labels = []
    error_positions = []
    pos = 0
    for i in range(m):
        level = slope = None
        seasonal = cycle = None
        if spec.mu[i]:
            level = pos
            state_labels.append((i, "level"))
            pos += 1
        if spec.rho[i] != 0:
            slope = pos
            state_labels.append((i, "slope"))
            pos += 1
        if spec.S[i]:
            ns = spec.S[i] - 1
            seasonal = (pos, ns)
            state_labels.extend((i, f"seasonal_lag{k}") for k in range(ns))
            pos += ns
        if spec.vrho[i] != 0:
            cycle = (pos, pos + 1)
            state_labels.append((i, "cycle"))
            state_labels.append((i, "cycle_star"))
            pos += 2
        layouts.append(SeriesLayout(i, level, slope, seasonal, cycle))
    assert pos == p

    Z = np.zeros((m, p))
    T = np.zeros((p, p))
    c = np.zeros(p)
    for lay in layouts:
        i = lay.series
        if lay.level is not None:
            T[lay.level, lay.level] = 1.0
            Z[i, lay.level] = 1.0
            if lay.slope is not None:
                T[lay.level, lay.slope] = 1.0
        if lay.slope is not None:
            T[lay.slope, lay.slope] = spec.rho[i]
            c[lay.slope] = spec.D[i] * (1.0 - spec.rho[i])
        if lay.seasonal is not None:
            s0, ns = lay.seasonal
            T[s0, s0:s0 + ns] = -1.0
            for k in range(1, ns):
                T[s0 + k, s0 + k - 1] = 1.0
            Z[i, s0] = 1.0
        if lay.cycle is not None:
            w, ws = lay.cycle
            cl = spec.vrho[i] * math.cos(spec.lam[i])
            sl = spec.vrho[i] * math.sin(spec.lam[i])
            T[w, w] = cl
            T[w, ws] = sl
            T[ws, w] = -sl
            T[ws, ws] = cl
            Z[i, w] = 1.0

        if lay.level is not None:
            slot_labels.append((i, "trend"))
            error_positions.append(lay.level)
        if lay.slope is not None:
            slot_labels.append((i, "slope"))
            error_positions.append(lay.slope)
        if lay.seasonal is not None:
            slot_labels.append((i, "seasonal"))
            error_positions.append(lay.seasonal[0])
        if lay.cycle is not None:
            slot_labels.append((i, "cycle"))
            slot_labels.append((i, "cycle_star"))
            error_positions.extend(lay.cycle)

    error_positions = np.asarray(error_positions, dtype=int)
    R = np.zeros((p, r))
    R[error_positions, np.arange(r)] = 1.0

    n_trend = sum(spec.mu[i] + (spec.rho[i] != 0) for i in range(m))
    n_seas = sum(1 for s in spec.S if s)
    n_cyc = sum(1 for v in spec.vrho if v != 0)
    tv = _broadcast_variances(trend_variances, n_trend, DEFAULT_STATE_VARIANCE, "trend")
    sv = _broadcast_variances(seasonal_variances, n_seas, DEFAULT_STATE_VARIANCE, "seasonal")
    if cycle_variances is not None:
        cv_in = np.atleast_1d(np.asarray(cycle_variances, dtype=float))
        if cv_in.shape == (n_cyc,):
            cv_in = np.repeat(cv_in, 2)
        cv = _broadcast_variances(cv_in, 2 * n_cyc, DEFAULT_STATE_VARIANCE, "cycle")
    else:
        cv = np.full(2 * n_cyc, DEFAULT_STATE_VARIANCE)

    qdiag = np.empty(r)
    it_t, it_s, it_c = iter(tv), iter(sv), iter(cv)
    for k, (_, name) in enumerate(slot_labels):
        if name in ("trend", "slope"):
            qdiag[k] = next(it_t)
        elif name == "seasonal":
            qdiag[k] = next(it_s)
        else:
            qdiag[k] = next(it_c)

    if obs_cov is None:
        Ht = DEFAULT_OBS_VARIANCE * np.eye(m)
    else:
        Ht = np.asarray(obs_cov, dtype=float)
        if Ht.shape != (m, m):
            raise ValidationError(f"observation covariance must be {m}x{m}, got {Ht.shape}")

    return StateSpaceSystem(
        spec=spec,
        Z=Z,
        T=T,
        R=R,
        c=c,
        Qt=np.diag(qdiag),
        Ht=Ht,
        a1=np.zeros(p),
        P1=np.zeros((p, p)),
        P1inf=np.eye(p),
        layouts=tuple(layouts),
        state_labels=tuple(state_labels),
        slot_labels=tuple(slot_labels),
        error_positions=error_positions,
    )


def make_system(Z, T, R, Qt, Ht, a1=None, P1=None, P1inf=None, c=None) -> StateSpaceSystem:
    """Assemble a system from raw matrices (toy models and test oracles).

    Defaults: zero initial mean, zero proper initial covariance, no diffuse
    states, zero transition constant.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    T = np.atleast_2d(np.asarray(T, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    Qt = np.atleast_2d(np.asarray(Qt, dtype=float))
    Ht = np.atleast_2d(np.asarray(Ht, dtype=float))
    p = T.shape[0]
    m = Z.shape[0]
    r = R.shape[1]
    if T.shape != (p, p) or Z.shape != (m, p) or R.shape != (p, r):
        raise ValidationError("inconsistent Z/T/R shapes")
    if Qt.shape != (r, r) or Ht.shape != (m, m):
        raise ValidationError("inconsistent Qt/Ht shapes")
    a1 = np.zeros(p) if a1 is None else np.asarray(a1, dtype=float).reshape(p)
    P1 = np.zeros((p, p)) if P1 is None else np.asarray(P1, dtype=float).reshape(p, p)
    P1inf = np.zeros((p, p)) if P1inf is None else np.asarray(P1inf, dtype=float).reshape(p, p)
    c = np.zeros(p) if c is None else np.asarray(c, dtype=float).reshape(p)
    spec = ModelSpec.of([0], [0.0], [0.0], [0], [0.0], [0.0])
    return StateSpaceSystem(
        spec=spec, Z=Z, T=T, R=R, c=c, Qt=Qt, Ht=Ht, a1=a1, P1=P1, P1inf=P1inf,
        layouts=(), state_labels=(), slot_labels=(), error_positions=np.zeros(0, dtype=int),
    )


@dataclass
class FilterResult:
    """Kalman filter output.

    ``predicted_*`` hold the one-step-ahead moments a[t | y_1..t-1]
    (index 0 is the initial condition); ``filtered_*`` hold a[t | y_1..t].
    ``loglik`` excludes the first ``n_diffuse_skip`` time points and is
    +inf with ``degenerate=True`` when an exactly singular predictive
    covariance was consistent with the data (a point-mass likelihood).
    """

    loglik: float
    filtered_means: np.ndarray
    filtered_covs: np.ndarray
    predicted_means: np.ndarray
    predicted_covs: np.ndarray
    innovations: np.ndarray
    innovation_covs: np.ndarray
    degenerate: bool
    n_diffuse_skip: int


def _initial_cov(sys: StateSpaceSystem):
    return sys.P1 + DIFFUSE_SCALE * sys.P1inf


def _effective_obs(sys, Y, offset):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != sys.m:
        raise ValidationError(f"Y must be n x {sys.m}, got shape {Y.shape}")
    if Y.shape[0] < 1:
        raise ValidationError("need at least one observation")
    if not np.all(np.isfinite(Y)):
        raise ValidationError("Y contains non-finite values")
    if offset is None:
        return Y.copy()
    offset = np.asarray(offset, dtype=float)
    if offset.shape != Y.shape:
        raise ValidationError(f"offset shape {offset.shape} does not match Y shape {Y.shape}")
    if not np.all(np.isfinite(offset)):
        raise ValidationError("offset contains non-finite values")
    return Y - offset


def _forward(Z, T, R, Q, H, c, a1, P1, Yeff, skip):
    n, m = Yeff.shape
    p = T.shape[0]
    RQR = R @ Q @ R.T

    a_pred = np.empty((n, p))
    P_pred = np.empty((n, p, p))
    a_filt = np.empty((n, p))
    P_filt = np.empty((n, p, p))
    vs = np.empty((n, m))
    Fs = np.empty((n, m, m))
    Fis = np.empty((n, m, m))
    loglik = 0.0
    degenerate = False
    log2pi = math.log(2.0 * math.pi)

    a = a1.astype(float).copy()
    P = P1.astype(float).copy()
    for t in range(n):
        a_pred[t] = a
        P_pred[t] = P
        v = Yeff[t] - Z @ a
        PZ = P @ Z.T
        F = Z @ PZ + H
        F = 0.5 * (F + F.T)
        try:
            L = np.linalg.cholesky(F)
            Fi = np.linalg.inv(F)
            logdet = 2.0 * np.log(np.diag(L)).sum()
            if t >= skip:
                loglik += -0.5 * (m * log2pi + logdet + v @ Fi @ v)
        except np.linalg.LinAlgError:
            # Singular predictive covariance: only consistent observations
            # are possible, and the likelihood degenerates to a point mass.
            w, U = np.linalg.eigh(F)
            tol = max(float(w.max()), 0.0) * 1e-12 + 1e-300
            wi = np.where(w > tol, 1.0 / np.where(w > tol, w, 1.0), 0.0)
            Fi = (U * wi) @ U.T
            resid = v - F @ (Fi @ v)
            if np.abs(resid).max() > 1e-6 * (1.0 + np.abs(v).max()):
                raise NumericError(
                    "observation inconsistent with a degenerate (singular) predictive covariance"
                ) from None
            degenerate = True
        vs[t] = v
        Fs[t] = F
        Fis[t] = Fi
        gain = PZ @ Fi
        a_f = a + gain @ v
        P_f = P - gain @ PZ.T
        P_f = 0.5 * (P_f + P_f.T)
        a_filt[t] = a_f
        P_filt[t] = P_f
        a = c + T @ a_f
        P = T @ P_f @ T.T + RQR
        P = 0.5 * (P + P.T)

    if degenerate:
        loglik = math.inf
    return {
        "loglik": loglik,
        "a_pred": a_pred,
        "P_pred": P_pred,
        "a_filt": a_filt,
        "P_filt": P_filt,
        "v": vs,
        "F": Fs,
        "Fi": Fis,
        "degenerate": degenerate,
    }


def kalman_filter(sys: StateSpaceSystem, Y, offset=None) -> FilterResult:
    """Filter (Y - offset) through the system.

    Diffuse states use the large-variance approximation; the log likelihood
    drops the first d time points, d = number of diffuse states.
    """
    Yeff = _effective_obs(sys, Y, offset)
    skip = int(round(float(np.trace(sys.P1inf))))
    fw = _forward(sys.Z, sys.T, sys.R, sys.Qt, sys.Ht, sys.c, sys.a1, _initial_cov(sys), Yeff, skip)
    return FilterResult(
        loglik=fw["loglik"],
        filtered_means=fw["a_filt"],
        filtered_covs=fw["P_filt"],
        predicted_means=fw["a_pred"],
        predicted_covs=fw["P_pred"],
        innovations=fw["v"],
        innovation_covs=fw["F"],
        degenerate=fw["degenerate"],
        n_diffuse_skip=min(skip, Yeff.shape[0]),
    )


def _backward(Z, T, fw):
    a_pred = fw["a_pred"]
    P_pred = fw["P_pred"]
    vs = fw["v"]
    Fis = fw["Fi"]
    n, p = a_pred.shape

    sm_mean = np.empty((n, p))
    sm_cov = np.empty((n, p, p))
    r_vec = np.zeros(p)
    N = np.zeros((p, p))
    for t in range(n - 1, -1, -1):
        Fi = Fis[t]
        FiZ = Fi @ Z
        K = T @ P_pred[t] @ Z.T @ Fi
        L = T - K @ Z
        r_vec = Z.T @ (Fi @ vs[t]) + L.T @ r_vec
        N = Z.T @ FiZ + L.T @ N @ L
        N = 0.5 * (N + N.T)
        sm_mean[t] = a_pred[t] + P_pred[t] @ r_vec
        V = P_pred[t] - P_pred[t] @ N @ P_pred[t]
        sm_cov[t] = 0.5 * (V + V.T)
    return sm_mean, sm_cov


def smooth(sys: StateSpaceSystem, Y, offset=None):
    """Fixed-interval smoother: E[alpha_t | all data] and its covariance.

    Returns (means [n, p], covariances [n, p, p]).
    """
    Yeff = _effective_obs(sys, Y, offset)
    skip = int(round(float(np.trace(sys.P1inf))))
    fw = _forward(sys.Z, sys.T, sys.R, sys.Qt, sys.Ht, sys.c, sys.a1, _initial_cov(sys), Yeff, skip)
    return _backward(sys.Z, sys.T, fw)


def simulate_states(sys: StateSpaceSystem, n, rng: RngStream):
    """Draw an unconditional trajectory (states [n, p], observations [n, m]).

    The initial state is N(a1, P1 + DIFFUSE_SCALE * P1inf). Consumes, in
    order: p normals for the initial state, (n-1) x r state-noise normals,
    then n x m observation-noise normals.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    p, r, m = sys.p, sys.r, sys.m
    alpha = np.empty((n, p))
    alpha[0] = draw_mvnormal(sys.a1, _initial_cov(sys), rng)
    Lq = cov_factor(sys.Qt, "Qt")
    Le = cov_factor(sys.Ht, "Ht")
    zs = rng.standard_normal((n - 1, r)) if n > 1 else np.zeros((0, r))
    ze = rng.standard_normal((n, m))
    for t in range(n - 1):
        alpha[t + 1] = sys.c + sys.T @ alpha[t] + sys.R @ (Lq @ zs[t])
    y = alpha @ sys.Z.T + ze @ Le.T
    return alpha, y


def simulation_smoother(sys: StateSpaceSystem, Y, offset, rng: RngStream):
    """One draw from p(states | Y, system) by mean correction.

    Simulates an unconditional pair (alpha+, y+), then adds the smoothed
    estimate of the simulation error: alpha+ + E[alpha | (Y - offset) - y+]
    computed with zeroed initial mean and transition constant, which equals
    the classic alpha+ - smooth(y+) + smooth(Y) combination exactly.
    """
    Yeff = _effective_obs(sys, Y, offset)
    n = Yeff.shape[0]
    alpha_plus, y_plus = simulate_states(sys, n, rng)
    delta = Yeff - y_plus
    fw = _forward(sys.Z, sys.T, sys.R, sys.Qt, sys.Ht,
                  np.zeros(sys.p), np.zeros(sys.p), _initial_cov(sys), delta, skip=n)
    sm_mean, _ = _backward(sys.Z, sys.T, fw)
    return alpha_plus + sm_mean
