"""Command-line surface: simulate | train | forecast | report.

Configuration lives in one JSON file with sections "simulate", "model",
"prior", "train", "forecast" plus a top-level "seed"; command-line flags
override file values. Every run writes a config_echo.json with all defaults
resolved, and re-running from an echo reproduces identical outputs.

Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

import numpy as np

from . import io as mio
from .errors import NumericError, ValidationError
from .forecast import forecast
from .gibbs import PriorConfig, train
from .report import (
    component_decomposition,
    emit_plots,
    error_metrics,
    inclusion_probabilities,
    parameter_estimates,
)
from .rng import GENERATOR_ALGORITHM, RngStream
from .simulate import SimConfig, dataset_column_names
from .simulate import simulate_dataset
from .statespace import ModelSpec, build_state_space

DEFAULT_SEED = 0


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise OSError(f"config file not found: {p}")
    try:
        cfg = mio.read_json(p)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{p}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(cfg, dict):
        raise ValidationError(f"{p}: top-level config must be a JSON object")
    return cfg


def _resolve_seed(args_seed, cfg):
    if args_seed is not None:
        return int(args_seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    return DEFAULT_SEED


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sim_config(cfg):
    if "simulate" not in cfg or "model" not in cfg:
        raise ValidationError('config needs "simulate" and "model" sections to simulate')
    sim = dict(cfg["simulate"])
    sim["model"] = cfg["model"]
    return SimConfig.from_dict(sim)


def _echo(out, seed, cfg, sections):
    echo = {"seed": seed, "rng": {"algorithm": GENERATOR_ALGORITHM}}
    echo.update(sections)
    for key in ("simulate", "model", "prior", "train", "forecast"):
        if key not in echo and key in cfg:
            echo[key] = cfg[key]
    return mio.write_json(out / "config_echo.json", echo)


def cmd_simulate(config_path, out_path, seed=None):
    """Generate a dataset CSV, per-component truth CSVs, and a config echo."""
    cfg = _load_config(config_path)
    seed = _resolve_seed(seed, cfg)
    sim_cfg = _sim_config(cfg)
    out = _out_dir(out_path)

    rng = RngStream(seed)
    data = simulate_dataset(sim_cfg, rng)
    n, m = data.Y.shape
    K = data.X.shape[1]
    table = np.column_stack([data.Y, data.X])
    mio.write_matrix_csv(out / "dataset.csv", dataset_column_names(m, K), table)

    series_cols = [f"series{i + 1}" for i in range(m)]
    truth = data.truth
    for name, arr in (("trend", truth.trend), ("slope", truth.slope), ("seasonal", truth.seasonal),
                      ("cycle", truth.cycle), ("cycle_star", truth.cycle_star),
                      ("regression", truth.regression), ("errors", truth.errors)):
        mio.write_matrix_csv(out / f"truth_{name}.csv", series_cols, arr)
    mio.write_csv(out / "truth_coefficients.csv", ["index", "series", "value"],
                  [[j + 1, int(np.searchsorted(np.asarray(data.ki), j, side="right")) + 1, b]
                   for j, b in enumerate(truth.beta_stacked)])

    sim_dict = sim_cfg.to_dict()
    model = sim_dict.pop("model")
    _echo(out, seed, cfg, {"simulate": sim_dict, "model": model})
    return out / "dataset.csv"


def _split_dataset(header, table, m, K, what="dataset"):
    if table.shape[1] != m + K:
        raise ValidationError(
            f"{what} has {table.shape[1]} columns; expected {m} targets + {K} predictors"
        )
    return table[:, :m], table[:, m:]


def _train_single(Y, X, spec, prior, mc, burn, seed, stream_id, keep_states):
    rng = RngStream(seed, stream_id)
    return train(Y, X, spec, prior, mc, burn, rng, keep_states=keep_states)


def cmd_train(data_path, config_path, out_path, seed=None, train_rows=None, chains=None,
              threshold=None, keep_states=None):
    """Train on a dataset CSV; persist draws, reports, plots, and a config echo."""
    cfg = _load_config(config_path)
    seed = _resolve_seed(seed, cfg)
    if "model" not in cfg or "prior" not in cfg:
        raise ValidationError('config needs "model" and "prior" sections to train')
    spec = ModelSpec.from_dict(cfg["model"])
    prior = PriorConfig.from_dict(cfg["prior"])
    tr = dict(cfg.get("train", {}))
    mc = int(tr.get("mc", 500))
    burn = int(tr.get("burn", 50))
    train_rows = int(train_rows if train_rows is not None else tr.get("train_rows", 0)) or None
    chains = int(chains if chains is not None else tr.get("chains", 1))
    threshold = float(threshold if threshold is not None else tr.get("threshold", 0.8))
    if keep_states is None:
        keep_states = bool(tr.get("keep_states", True))
    if chains < 1:
        raise ValidationError(f"chains must be at least 1, got {chains}")

    header, table = mio.read_numeric_csv(data_path)
    m, K = spec.m, prior.K
    Y, X = _split_dataset(header, table, m, K)
    n_total = Y.shape[0]
    if train_rows is None:
        train_rows = n_total
    if not 2 <= train_rows <= n_total:
        raise ValidationError(f"train_rows must lie in [2, {n_total}], got {train_rows}")
    Ytr, Xtr = Y[:train_rows], X[:train_rows]

    out = _out_dir(out_path)
    echo_sections = {
        "model": spec.to_dict(),
        "prior": prior.to_dict(),
        "train": {"mc": mc, "burn": burn, "train_rows": train_rows, "chains": chains,
                  "threshold": threshold, "keep_states": keep_states},
    }
    echo_path = _echo(out, seed, cfg, echo_sections)
    config_echo = mio.read_json(echo_path)

    if chains == 1:
        all_draws = [_train_single(Ytr, Xtr, spec, prior, mc, burn, seed, 0, keep_states)]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=chains) as pool:
            futures = [pool.submit(_train_single, Ytr, Xtr, spec, prior, mc, burn, seed, c, keep_states)
                       for c in range(chains)]
            all_draws = [f.result() for f in futures]

    draw_paths = []
    for c, draws in enumerate(all_draws):
        name = "draws.zip" if chains == 1 else f"draws_chain{c}.zip"
        draw_paths.append(mio.save_draws(draws, out / name, config_echo=config_echo))

    draws = all_draws[0]
    report = inclusion_probabilities(draws, threshold)
    write_inclusion_csv(out / "inclusion.csv", report)
    est = parameter_estimates(draws, threshold)
    write_estimates_csv(out / "estimates.csv", est)
    decomposition = None
    if keep_states:
        decomposition = component_decomposition(draws, spec)
        write_decomposition_csv(out / "decomposition.csv", decomposition)
    emit_plots(report, decomposition, out, observed=Ytr)
    return draw_paths[0]


def _load_forecast_inputs(draws, newdata_path, steps, truth_path):
    m, K, ntrain = draws.mtrain, draws.ki[-1], draws.ntrain
    header, table = mio.read_numeric_csv(newdata_path)
    if table.shape[1] == K:
        rows = table
        if rows.shape[0] < steps:
            raise ValidationError(f"newdata has {rows.shape[0]} rows but {steps} steps requested")
        newdata = rows[:steps]
    elif table.shape[1] == m + K:
        # Full dataset layout: forecast the rows right after the training split.
        if table.shape[0] < ntrain + steps:
            raise ValidationError(
                f"dataset has {table.shape[0]} rows; need {ntrain + steps} to forecast {steps} steps"
            )
        newdata = table[ntrain:ntrain + steps, m:]
    else:
        raise ValidationError(
            f"newdata must have {K} predictor columns or the {m + K}-column dataset layout"
        )

    truth = None
    if truth_path is not None:
        theader, ttable = mio.read_numeric_csv(truth_path)
        if ttable.shape[1] == m:
            if ttable.shape[0] < steps:
                raise ValidationError(f"truth has {ttable.shape[0]} rows but {steps} steps requested")
            truth = ttable[:steps]
        elif ttable.shape[1] == m + K:
            if ttable.shape[0] < ntrain + steps:
                raise ValidationError("truth dataset has too few rows for the requested steps")
            truth = ttable[ntrain:ntrain + steps, :m]
        else:
            raise ValidationError(f"truth must have {m} columns or the dataset layout")
    return newdata, truth


def cmd_forecast(draws_path, newdata_path, steps, seed=None, truth_path=None, out_path=".",
                 save_distribution=False, config_path=None):
    """Forecast from persisted draws; write pred_mean.csv and error metrics."""
    cfg = _load_config(config_path)
    seed = _resolve_seed(seed, cfg)
    if steps is None:
        steps = int(cfg.get("forecast", {}).get("steps", 1))
    steps = int(steps)
    if steps < 0:
        raise ValidationError(f"steps must be non-negative, got {steps}")

    draws = mio.load_draws(draws_path)
    sys_template = build_state_space(draws.spec)
    if steps > 0:
        newdata, truth = _load_forecast_inputs(draws, newdata_path, steps, truth_path)
    else:
        newdata, truth = np.zeros((0, draws.ki[-1])), None

    rng = RngStream(seed)
    result = forecast(draws, sys_template, newdata, steps, rng)
    out = _out_dir(out_path)
    m = draws.mtrain
    header = ["step"] + [f"Y{i + 1}" for i in range(m)]
    mio.write_csv(out / "pred_mean.csv", header,
                  [[s + 1] + result.pred_mean[s].tolist() for s in range(steps)])
    if save_distribution:
        with (out / "pred_distribution.npy").open("wb") as fh:
            np.save(fh, result.pred_distribution, allow_pickle=False)
    if truth is not None:
        metrics = error_metrics(result.pred_mean, truth)
        mio.write_csv(out / "error_abs.csv", header,
                      [[s + 1] + metrics.abs_error[s].tolist() for s in range(steps)])
        mio.write_csv(out / "error_ratio.csv", header,
                      [[s + 1] + metrics.ratio[s].tolist() for s in range(steps)])
    _echo(out, seed, cfg, {"forecast": {"steps": steps, "draws": str(draws_path),
                                        "newdata": str(newdata_path),
                                        "truth": None if truth_path is None else str(truth_path)}})
    return out / "pred_mean.csv"


def cmd_report(draws_path, out_path, threshold=0.8, data_path=None, export_arrays=False,
               names=None):
    """Regenerate reports and plots from a persisted draws file."""
    draws = mio.load_draws(draws_path)
    out = _out_dir(out_path)
    report = inclusion_probabilities(draws, threshold, names=names)
    write_inclusion_csv(out / "inclusion.csv", report)
    est = parameter_estimates(draws, threshold)
    write_estimates_csv(out / "estimates.csv", est)
    decomposition = None
    observed = None
    if data_path is not None:
        header, table = mio.read_numeric_csv(data_path)
        observed = table[:draws.ntrain, :draws.mtrain]
    if draws.States is not None:
        decomposition = component_decomposition(draws, draws.spec)
        write_decomposition_csv(out / "decomposition.csv", decomposition)
    emit_plots(report, decomposition, out, observed=observed)
    if export_arrays:
        mio.export_draw_arrays(draws, out / "arrays")
    return out / "inclusion.csv"


def write_inclusion_csv(path, report):
    rows = [[report.names[j], int(report.series[j]) + 1, report.probability[j],
             int(report.sign[j]), int(report.selected[j])]
            for j in range(report.K)]
    return mio.write_csv(path, ["name", "series", "probability", "sign", "selected"], rows)


def write_estimates_csv(path, est):
    rows = [[int(est.index[i]), est.mean[i], est.sd[i]] for i in range(est.index.size)]
    return mio.write_csv(path, ["index", "mean", "sd"], rows)


def write_decomposition_csv(path, decomposition):
    rows = []
    n = decomposition.paths.shape[0]
    for q, (s, name) in enumerate(decomposition.labels):
        for t in range(n):
            rows.append([t + 1, s + 1, name, decomposition.paths[t, q]])
    return mio.write_csv(path, ["t", "series", "component", "value"], rows)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mvsts",
        description="Multivariate Bayesian structural time series: simulate, train, forecast, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset with stored truth")
    p_sim.add_argument("--config", required=True, help="JSON config with simulate/model sections")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None)

    p_train = sub.add_parser("train", help="run the Gibbs sampler on a dataset CSV")
    p_train.add_argument("--data", required=True, help="dataset CSV (targets then predictors)")
    p_train.add_argument("--config", required=True, help="JSON config with model/prior sections")
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--train-rows", type=int, default=None)
    p_train.add_argument("--chains", type=int, default=None)
    p_train.add_argument("--threshold", type=float, default=None)
    p_train.add_argument("--no-states", action="store_true", help="do not retain state-path draws")

    p_fc = sub.add_parser("forecast", help="posterior predictive forecast from saved draws")
    p_fc.add_argument("--draws", required=True)
    p_fc.add_argument("--newdata", required=True,
                      help="future predictor CSV (or the full dataset CSV)")
    p_fc.add_argument("--steps", type=int, default=None)
    p_fc.add_argument("--seed", type=int, default=None)
    p_fc.add_argument("--truth", default=None, help="future target CSV for error metrics")
    p_fc.add_argument("--out", required=True)
    p_fc.add_argument("--config", default=None)
    p_fc.add_argument("--save-distribution", action="store_true")

    p_rep = sub.add_parser("report", help="regenerate reports and plots from saved draws")
    p_rep.add_argument("--draws", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--threshold", type=float, default=0.8)
    p_rep.add_argument("--data", default=None, help="dataset CSV to overlay observed series")
    p_rep.add_argument("--export-arrays", action="store_true")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(args.config, args.out, seed=args.seed)
        elif args.command == "train":
            cmd_train(args.data, args.config, args.out, seed=args.seed,
                      train_rows=args.train_rows, chains=args.chains,
                      threshold=args.threshold,
                      keep_states=False if args.no_states else None)
        elif args.command == "forecast":
            cmd_forecast(args.draws, args.newdata, args.steps, seed=args.seed,
                         truth_path=args.truth, out_path=args.out,
                         save_distribution=args.save_distribution, config_path=args.config)
        elif args.command == "report":
            cmd_report(args.draws, args.out, threshold=args.threshold, data_path=args.data,
                       export_arrays=args.export_arrays)
    except ValidationError as exc:
        print(f"mvsts: validation error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mvsts: I/O error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"mvsts: numeric error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
