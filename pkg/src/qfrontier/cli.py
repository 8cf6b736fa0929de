"""Command-line front end.

Subcommands
-----------
estimate
    Fit a frontier to a CSV file and write per-observation values, plus an
    optional dense curve for single-input data.
simulate
    Run Monte Carlo scenarios from a JSON config and write the results CSV.
convert
    Map a quantile level to the matching expectile level of an error law,
    or back.

Exit status is 0 on success, 2 for usage errors, 3 for data or config
errors and 4 when an estimation fails.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from importlib import resources

import numpy as np

from . import simulation
from .bridge import ErrorSpec, theoretical_expectile_of_quantile, theoretical_quantile_of_expectile
from .convex import fit_cer, fit_cqr, predict
from .core import DomainError, EstimationError, FrontierError, QuantileLevel, load_dataset
from .isotonic import fit_icer, fit_icqr, step_value
from .partial import (
    fdh,
    fit_convexified_order_alpha_shifted,
    fit_order_alpha,
    predict_order_alpha,
    vrs_frontier_value,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 2, 3, 4
METHODS = ("cqr", "cer", "icqr", "icer", "order-alpha", "coa", "fdh")
PROG = "qfrontier"


class UsageError(FrontierError):
    pass


def fmt(v) -> str:
    return format(float(v), ".9g")


def _parse_tau(method: str, tau):
    if method == "fdh":
        return None
    if tau is None:
        raise UsageError(f"--tau is required for method {method}")
    if method == "order-alpha" and tau == 1.0:
        return 1.0
    if not 0.0 < tau < 1.0:
        raise UsageError(f"tau must lie in (0,1), got {tau:g}")
    return tau


def _fit(method: str, dataset, tau):
    if method == "cqr":
        return fit_cqr(dataset, tau)
    if method == "icqr":
        return fit_icqr(dataset, tau)
    if method == "cer":
        return fit_cer(dataset, QuantileLevel.expectile(tau))
    if method == "icer":
        return fit_icer(dataset, QuantileLevel.expectile(tau))
    if method == "fdh" or (method == "order-alpha" and tau == 1.0):
        return fdh(dataset)
    if method == "order-alpha":
        return fit_order_alpha(dataset, tau)
    return fit_convexified_order_alpha_shifted(dataset, tau)


def _curve(method: str, dataset, fit, tau, points: int):
    x = dataset.inputs[:, 0]
    grid = np.linspace(x.min(), x.max(), points)
    if method in ("cqr", "cer"):
        vals = [predict(fit, [g]) for g in grid]
    elif method in ("icqr", "icer"):
        vals = [step_value(dataset.inputs, fit.fitted, np.array([g])) for g in grid]
    elif method == "coa":
        vals = [vrs_frontier_value(dataset.inputs, fit.extra["order_alpha"], [g]) for g in grid]
    else:
        level = 1.0 - 1e-12 if tau in (None, 1.0) else tau
        vals = [predict_order_alpha(dataset, level, [g]) for g in grid]
    return grid, np.asarray(vals, float)


def cmd_estimate(args) -> int:
    tau = _parse_tau(args.method, args.tau)
    x_cols = [c.strip() for c in args.x_cols.split(",") if c.strip()]
    if not x_cols:
        raise UsageError("--x-cols names no columns")
    if args.grid_points < 2:
        raise UsageError("--grid-points must be >= 2")
    dataset = load_dataset(args.input, x_cols, args.y_col, log_transform=args.log, label_column=args.label_col)
    if args.curve and dataset.d != 1:
        raise UsageError("--curve is only available for single-input data")
    fit = _fit(args.method, dataset, tau)

    regression = fit.intercepts is not None
    header = ["label"] + x_cols + ["output", "fitted", "residual_pos", "residual_neg"]
    if regression:
        header += ["intercept"] + [f"slope_{c}" for c in x_cols]
    labels = dataset.labels if dataset.labels is not None else [str(i) for i in range(dataset.n)]
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(dataset.n):
            row = [labels[i]] + [fmt(v) for v in dataset.inputs[i]]
            row += [fmt(dataset.outputs[i]), fmt(fit.fitted[i]), fmt(fit.residual_pos[i]), fmt(fit.residual_neg[i])]
            if regression:
                row += [fmt(fit.intercepts[i])] + [fmt(v) for v in fit.slopes[i]]
            w.writerow(row)
    if args.curve:
        grid, vals = _curve(args.method, dataset, fit, tau, args.grid_points)
        with open(args.curve, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "frontier"])
            for g, v in zip(grid, vals):
                w.writerow([fmt(g), fmt(v)])
    return EXIT_OK


def bundled_config(name: str):
    stem = name[:-5] if name.endswith(".json") else name
    ref = resources.files("qfrontier").joinpath("configs", stem + ".json")
    return ref if ref.is_file() else None


def cmd_simulate(args) -> int:
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    path = args.config
    if not os.path.exists(path):
        ref = bundled_config(path)
        if ref is None:
            raise simulation.ConfigError(f"$: no such config file or bundled config: {path}")
        with resources.as_file(ref) as p:
            configs = simulation.load_configs(p, full_scale=args.full_scale)
    else:
        configs = simulation.load_configs(path, full_scale=args.full_scale)
    seed = os.environ.get("FRONTIER_SEED")
    if seed not in (None, ""):
        try:
            base = int(seed, 0)
        except ValueError:
            raise UsageError(f"FRONTIER_SEED must be an integer, got {seed!r}") from None
        configs = [simulation.ScenarioConfig.from_dict({**c.to_dict(), "base_seed": base}) for c in configs]
    results = []
    for cfg in configs:
        if not args.quiet:
            print(f"{cfg.scenario_id}: {cfg.replications} replications", file=sys.stderr)
        results.append(simulation.run_experiment(cfg, threads=args.threads))
    simulation.write_results_csv(results, args.output)
    return EXIT_OK


_SPECS = {"normal": "noise_only", "halfnormal": "inefficiency_only", "composite": "composite"}


def cmd_convert(args) -> int:
    try:
        spec = ErrorSpec(_SPECS[args.spec], sigma_v=args.sigma_v, sigma_u=args.sigma_u)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    if not 0.0 < args.level < 1.0:
        raise UsageError(f"level must lie in (0,1), got {args.level:g}")
    if args.direction == "tau-to-expectile":
        out = theoretical_expectile_of_quantile(spec, args.level)
    else:
        out = theoretical_quantile_of_expectile(spec, args.level)
    print(f"{out:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=PROG, description="Quantile and expectile frontier estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="fit a frontier to a CSV file")
    e.add_argument("--method", required=True, choices=METHODS)
    e.add_argument("--tau", type=float,
                   help="quantile level; expectile level for cer/icer; order-alpha accepts 1.0 (FDH)")
    e.add_argument("--input", required=True, help="CSV file with a header row")
    e.add_argument("--x-cols", required=True, help="comma-separated input column names")
    e.add_argument("--y-col", required=True, help="output column name")
    e.add_argument("--label-col", help="optional column of observation labels")
    e.add_argument("--log", dest="log", action="store_true", help="take natural logs of inputs and output")
    e.add_argument("--no-log", dest="log", action="store_false")
    e.set_defaults(log=False)
    e.add_argument("--output", required=True, help="per-observation CSV to write")
    e.add_argument("--curve", help="frontier curve CSV to write (single input only)")
    e.add_argument("--grid-points", type=int, default=200)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="run Monte Carlo scenarios")
    s.add_argument("--config", required=True, help="scenario JSON file, or the name of a bundled config")
    s.add_argument("--output", required=True)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--full-scale", action="store_true",
                   help="1000 replications by default and no sample-size cap")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("convert", help="map between quantile and expectile levels")
    c.add_argument("--direction", required=True, choices=("tau-to-expectile", "expectile-to-tau"))
    c.add_argument("--spec", required=True, choices=tuple(_SPECS))
    c.add_argument("--sigma-v", type=float, default=1.0)
    c.add_argument("--sigma-u", type=float, default=1.0)
    c.add_argument("--level", required=True, type=float)
    c.set_defaults(func=cmd_convert)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        code = EXIT_USAGE
        msg = str(exc)
    except (EstimationError, simulation.ScenarioAborted) as exc:
        code, msg = EXIT_SOLVER, str(exc)
    except (FrontierError, OSError) as exc:
        code, msg = EXIT_DATA, str(exc)
    print(f"{PROG}: error: {' '.join(msg.split())}", file=sys.stderr)
    return code
