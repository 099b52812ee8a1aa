"""Post-processing of retained draws: inclusion probabilities, parameter
estimates, component decompositions, forecast error metrics, and SVG plots.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ValidationError
from .gibbs import McmcDraws
from .statespace import ModelSpec

# Fixed salt so repeated renders of the same figure are byte-identical.
_SVG_SALT = "mvsts"


@dataclass
class InclusionReport:
    """Per stacked predictor: selection frequency, dominant sign, membership.

    ``counts`` are exact draw counts; ``probability`` = counts / n_keep.
    ``sign`` is the sign of the mean coefficient over draws where the
    predictor was active (0 when never active or exactly zero).
    """

    names: tuple
    series: np.ndarray
    counts: np.ndarray
    probability: np.ndarray
    sign: np.ndarray
    selected: np.ndarray
    threshold: float
    n_keep: int

    @property
    def K(self):
        return len(self.names)


@dataclass
class ParameterEstimate:
    """Selected predictors (1-based stacked indices) with conditional moments.

    ``mean`` and ``sd`` are taken over the draws in which each selected
    predictor was active, matching the convention that reported estimates
    are not shrunk by the inclusion frequency.
    """

    index: np.ndarray
    mean: np.ndarray
    sd: np.ndarray


@dataclass
class Decomposition:
    """Posterior-mean component paths, labeled (series, component)."""

    labels: tuple
    paths: np.ndarray  # [n, len(labels)]

    def for_series(self, i):
        return {name: self.paths[:, j] for j, (s, name) in enumerate(self.labels) if s == i}


@dataclass
class ErrorMetrics:
    """Elementwise |pred - truth| and |pred - truth| / |truth|.

    Cells with zero truth get an infinite ratio as the non-finite sentinel.
    """

    abs_error: np.ndarray
    ratio: np.ndarray


def _series_membership(ki, K):
    bounds = (0,) + tuple(ki)
    series = np.empty(K, dtype=int)
    for i in range(len(ki)):
        series[bounds[i]:bounds[i + 1]] = i
    return series


def inclusion_probabilities(draws: McmcDraws, threshold, names=None) -> InclusionReport:
    """Empirical inclusion probabilities with dominant coefficient signs."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must lie in [0, 1], got {threshold}")
    K = draws.K
    if names is None or len(names) == 0:
        names = tuple(f"x{j + 1}" for j in range(K))
    elif len(names) != K:
        raise ValidationError(f"expected {K} names, got {len(names)}")
    else:
        names = tuple(str(s) for s in names)

    counts = draws.Ind.astype(np.int64).sum(axis=1)
    probability = counts / draws.n_keep
    sign = np.zeros(K, dtype=int)
    for j in range(K):
        active = draws.Ind[j] == 1
        if active.any():
            mean = draws.beta_hat[j, active].mean()
            sign[j] = int(np.sign(mean))
    return InclusionReport(
        names=names,
        series=_series_membership(draws.ki, K),
        counts=counts,
        probability=probability,
        sign=sign,
        selected=probability >= threshold,
        threshold=float(threshold),
        n_keep=draws.n_keep,
    )


def parameter_estimates(draws: McmcDraws, threshold) -> ParameterEstimate:
    """Conditional posterior mean and sd for predictors passing the threshold.

    Indices are 1-based stacked predictor positions, ascending. An empty
    result (no predictor passes) is not an error.
    """
    report = inclusion_probabilities(draws, threshold)
    idx = np.flatnonzero(report.selected)
    means = np.empty(idx.size)
    sds = np.empty(idx.size)
    for out_pos, j in enumerate(idx):
        active = draws.Ind[j] == 1
        vals = draws.beta_hat[j, active]
        means[out_pos] = vals.mean()
        sds[out_pos] = vals.std(ddof=0)
    return ParameterEstimate(index=idx + 1, mean=means, sd=sds)


def component_decomposition(draws: McmcDraws, spec: ModelSpec) -> Decomposition:
    """Average the retained component-signal draws per series.

    ``spec`` must equal the spec the draws were trained with.
    """
    if spec != draws.spec:
        raise ValidationError("spec does not match the one stored with the draws")
    if draws.States is None:
        raise ValidationError("draws were trained without state retention; cannot decompose")
    if draws.States.shape[1] == 0:
        return Decomposition(labels=(), paths=np.zeros((draws.States.shape[0], 0)))
    return Decomposition(labels=tuple(draws.signal_labels), paths=draws.States.mean(axis=2))


def error_metrics(pred_mean, truth) -> ErrorMetrics:
    """Absolute errors and error ratios of a point forecast against truth."""
    pred_mean = np.asarray(pred_mean, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred_mean.shape != truth.shape:
        raise ValidationError(f"shape mismatch: pred {pred_mean.shape} vs truth {truth.shape}")
    abs_error = np.abs(pred_mean - truth)
    denom = np.abs(truth)
    ratio = np.where(denom > 0, abs_error / np.where(denom > 0, denom, 1.0), np.inf)
    return ErrorMetrics(abs_error=abs_error, ratio=ratio)


def _save_svg(fig, path):
    with plt.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_plots(inclusion: InclusionReport | None, decomposition: Decomposition | None,
               out_dir, observed=None) -> list:
    """Write static SVG plots; returns the created paths.

    One inclusion-probability bar chart per series (red bars for positive
    conditional means, blue for negative) and one component-path figure per
    series with components. Empty inputs produce no files. Identical inputs
    produce byte-identical files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    if inclusion is not None and inclusion.K > 0:
        for i in sorted(set(inclusion.series.tolist())):
            cols = np.flatnonzero(inclusion.series == i)
            fig, ax = plt.subplots(figsize=(6.5, 3.5))
            colors = ["tab:red" if inclusion.sign[j] > 0 else "tab:blue" if inclusion.sign[j] < 0 else "0.6"
                      for j in cols]
            ax.bar(np.arange(cols.size), inclusion.probability[cols], color=colors)
            ax.axhline(inclusion.threshold, color="k", lw=0.8, ls="--")
            ax.set_xticks(np.arange(cols.size))
            ax.set_xticklabels([inclusion.names[j] for j in cols], rotation=60, fontsize=7)
            ax.set_ylim(0, 1.05)
            ax.set_ylabel("inclusion probability")
            ax.set_title(f"Inclusion probabilities, series {i + 1}")
            fig.tight_layout()
            path = out_dir / f"inclusion_series{i + 1}.svg"
            _save_svg(fig, path)
            written.append(path)

    if decomposition is not None and decomposition.labels:
        for i in sorted({s for s, _ in decomposition.labels}):
            comps = decomposition.for_series(i)
            nrows = len(comps) + (1 if observed is not None else 0)
            fig, axes = plt.subplots(nrows, 1, figsize=(6.5, 1.6 * nrows), sharex=True, squeeze=False)
            row = 0
            if observed is not None:
                obs = np.asarray(observed, dtype=float)
                axes[row, 0].plot(obs[:, i], color="0.3", lw=0.8)
                axes[row, 0].set_ylabel("observed", fontsize=8)
                row += 1
            for name, vals in comps.items():
                axes[row, 0].plot(vals, lw=0.9)
                axes[row, 0].set_ylabel(name, fontsize=8)
                row += 1
            axes[-1, 0].set_xlabel("t")
            fig.suptitle(f"Posterior mean components, series {i + 1}", fontsize=10)
            fig.tight_layout()
            path = out_dir / f"components_series{i + 1}.svg"
            _save_svg(fig, path)
            written.append(path)

    return written
