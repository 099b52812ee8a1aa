"""Independent brute-force oracles used by the test suite.

Everything here conditions explicit joint Gaussian distributions or sums
over full model enumerations; none of it shares code paths with the
package's filter, smoother, or sweep implementations.
"""

import numpy as np
from scipy.stats import multivariate_normal


def joint_gaussian_moments(sys, Y, offset=None, diffuse_scale=1e7):
    """Filtered/smoothed moments and loglik by explicit joint-normal conditioning.

    Builds the exact joint distribution of (all states, all observations)
    from the recursion, then conditions. Returns a dict with filtered_means,
    filtered_covs, smoothed_means, smoothed_covs, and loglik (over all time
    points, no diffuse skipping).
    """
    Y = np.asarray(Y, dtype=float)
    n, m = Y.shape
    p = sys.T.shape[0]
    Z, T, R, c = sys.Z, sys.T, sys.R, sys.c
    Q = sys.Qt
    H = sys.Ht
    P1 = sys.P1 + diffuse_scale * sys.P1inf
    offset = np.zeros_like(Y) if offset is None else np.asarray(offset, dtype=float)

    # State means and pairwise covariances.
    mean_a = np.zeros((n, p))
    mean_a[0] = sys.a1
    for t in range(n - 1):
        mean_a[t + 1] = c + T @ mean_a[t]
    cov_a = np.zeros((n, n, p, p))
    cov_a[0, 0] = P1
    RQR = R @ Q @ R.T
    for t in range(n - 1):
        cov_a[t + 1, t + 1] = T @ cov_a[t, t] @ T.T + RQR
        for s in range(t + 1):
            cov_a[t + 1, s] = T @ cov_a[t, s]
            cov_a[s, t + 1] = cov_a[t + 1, s].T

    # Stacked (states, observations) joint normal.
    mean_y = (mean_a @ Z.T + offset).reshape(n * m)
    cov_yy = np.zeros((n * m, n * m))
    cov_ay = np.zeros((n * p, n * m))
    for t in range(n):
        for s in range(n):
            blk = Z @ cov_a[t, s] @ Z.T
            if t == s:
                blk = blk + H
            cov_yy[t * m:(t + 1) * m, s * m:(s + 1) * m] = blk
            cov_ay[t * p:(t + 1) * p, s * m:(s + 1) * m] = cov_a[t, s] @ Z.T
    cov_aa = np.zeros((n * p, n * p))
    for t in range(n):
        for s in range(n):
            cov_aa[t * p:(t + 1) * p, s * p:(s + 1) * p] = cov_a[t, s]

    yvec = Y.reshape(n * m)
    loglik = multivariate_normal.logpdf(yvec, mean=mean_y, cov=cov_yy, allow_singular=True)

    def _condition(upto):
        """Posterior of all states given y_1..y_upto."""
        k = upto * m
        s_yy = cov_yy[:k, :k]
        s_ay = cov_ay[:, :k]
        sol = np.linalg.solve(s_yy, (yvec[:k] - mean_y[:k]))
        mean_post = mean_a.reshape(n * p) + s_ay @ sol
        cov_post = cov_aa - s_ay @ np.linalg.solve(s_yy, s_ay.T)
        return mean_post.reshape(n, p), cov_post

    filtered_means = np.zeros((n, p))
    filtered_covs = np.zeros((n, p, p))
    for t in range(n):
        mean_post, cov_post = _condition(t + 1)
        filtered_means[t] = mean_post[t]
        filtered_covs[t] = cov_post[t * p:(t + 1) * p, t * p:(t + 1) * p]
    smoothed_mean, smoothed_cov_full = _condition(n)
    smoothed_covs = np.stack([smoothed_cov_full[t * p:(t + 1) * p, t * p:(t + 1) * p] for t in range(n)])
    return {
        "filtered_means": filtered_means,
        "filtered_covs": filtered_covs,
        "smoothed_means": smoothed_mean,
        "smoothed_covs": smoothed_covs,
        "loglik": loglik,
    }


def direct_log_marginal(y, Xcols, sigma2, kapp, pii, gamma, b=None):
    """Direct marginal likelihood of one univariate spike-and-slab model.

    Assembles the observation covariance sigma2*I + X_g A^-1 X_g' explicitly
    and evaluates the normal density, then adds the indicator prior. This is
    a covariance-space route, independent of the sampler's precision-space
    conjugate algebra.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    gamma = np.asarray(gamma, dtype=int)
    idx = np.flatnonzero(gamma)
    if b is None:
        b = np.zeros(Xcols.shape[1])
    if idx.size:
        Xg = Xcols[:, idx]
        A = (kapp / n) * (Xg.T @ Xg)
        cov = sigma2 * np.eye(n) + Xg @ np.linalg.solve(A, Xg.T)
        mean = Xg @ b[idx]
    else:
        cov = sigma2 * np.eye(n)
        mean = np.zeros(n)
    ll = multivariate_normal.logpdf(y, mean=mean, cov=cov)
    prior = np.sum(np.where(gamma == 1, np.log(pii), np.log1p(-pii)))
    return ll + prior


def enumerate_inclusion_posterior(y, Xcols, sigma2, kapp, pii, b=None):
    """Exact per-coordinate inclusion probabilities by full enumeration."""
    K = Xcols.shape[1]
    logps = np.empty(2 ** K)
    gammas = []
    for code in range(2 ** K):
        gamma = np.array([(code >> j) & 1 for j in range(K)])
        gammas.append(gamma)
        logps[code] = direct_log_marginal(y, Xcols, sigma2, kapp, pii, gamma, b=b)
    logps -= logps.max()
    w = np.exp(logps)
    w /= w.sum()
    probs = np.zeros(K)
    for weight, gamma in zip(w, gammas):
        probs += weight * gamma
    return probs


def ols(X, y):
    return np.linalg.lstsq(X, y, rcond=None)[0]
