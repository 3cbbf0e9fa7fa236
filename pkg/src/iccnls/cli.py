"""Command-line front end.

Subcommands: synth, fit, predict, sweep, inspect. Exit codes: 0 success,
2 usage or validation problems, 3 solver stopped at the iteration cap
(model and report are still written, flagged), 4 infeasible constraint
system. A JSON config file (--config) may supply any long option for the
subcommand, with explicit flags taking precedence.

Human-readable tables print with 6 significant digits; files meant for
machines (model JSON, report JSON, CSV outputs) carry full precision.
The single convex fit is persisted in the common model format with an
all-zero concave component, so prediction and inspection work uniformly.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace

import numpy as np

from .assembly import Variant
from .core import AffinePiece, ComponentSurface, Curvature, FitConfig, IccnlsModel
from .data_io import (
    ColumnRole,
    ColumnSpec,
    generate_synthetic,
    load_csv,
    load_model,
    load_points_csv,
    save_model,
    write_dataset_csv,
)
from .errors import IccnlsError, InfeasibleProblem, SolverFailed
from .estimators import fit_cnls, fit_iccnls, fit_mnls, sweep
from .metrics import component_hyperplane_counts
from .prediction import predict_batch

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MAX_ITER = 3
EXIT_INFEASIBLE = 4


def _fmt(value) -> str:
    """6-significant-digit rendering for tables; n.a. for undefined ratios."""
    if value is None:
        return "n.a."
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="training CSV with a header row")
    parser.add_argument("--target", help="name of the target column")
    parser.add_argument(
        "--categorical",
        action="append",
        default=None,
        help="categorical column name (repeatable)",
    )
    parser.add_argument(
        "--ignore",
        action="append",
        default=None,
        help="column name to ignore (repeatable)",
    )


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda", dest="lam", type=float, default=0.0,
                        help="regularization weight (default 0)")
    parser.add_argument("--mix", type=float, default=0.0,
                        help="elastic-net mix in [0,1]: 1 pure l1, 0 pure l2")
    parser.add_argument("--monotone", action="store_true",
                        help="add nonnegative-slope rows per component")
    parser.add_argument("--standardize", action="store_true",
                        help="z-score features internally")
    parser.add_argument("--tol", type=float, default=1e-6, help="solver tolerance")
    parser.add_argument("--max-iter", type=int, default=200, help="solver iteration cap")
    parser.add_argument("--gauge-ridge", type=float, default=1e-8,
                        help="gauge-pinning ridge used when lambda is 0")
    parser.add_argument("--round-tol", type=float, default=1e-4,
                        help="rounding grid for hyperplane counting")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iccnls",
        description="Shape-constrained concave + convex regression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="write a synthetic benchmark CSV")
    p_synth.add_argument("--config", help="JSON file of option defaults")
    p_synth.add_argument("--n", type=int, default=80, help="number of rows")
    p_synth.add_argument("--seed", type=int, default=0, help="generator seed")
    p_synth.add_argument("--noise-sd", type=float, default=0.5, help="noise spread")
    p_synth.add_argument("--out", help="output CSV path")

    p_fit = sub.add_parser("fit", help="fit one model and write model + report")
    p_fit.add_argument("--config", help="JSON file of option defaults")
    _add_data_options(p_fit)
    p_fit.add_argument("--variant", choices=[v.value for v in Variant],
                       default=Variant.ICCNLS.value)
    _add_config_options(p_fit)
    p_fit.add_argument("--model-out", help="where to write the model JSON")
    p_fit.add_argument("--report-out", help="where to write the report JSON")

    p_pred = sub.add_parser("predict", help="evaluate a saved model on query points")
    p_pred.add_argument("--config", help="JSON file of option defaults")
    p_pred.add_argument("--model", help="model JSON path")
    p_pred.add_argument("--input", help="CSV of query points (model feature columns)")
    p_pred.add_argument("--out", help="output CSV path")

    p_sweep = sub.add_parser("sweep", help="grid of identified fits over lambda and mix")
    p_sweep.add_argument("--config", help="JSON file of option defaults")
    _add_data_options(p_sweep)
    _add_config_options(p_sweep)
    p_sweep.add_argument("--lambdas", help="comma-separated lambda grid, e.g. 1,10,100")
    p_sweep.add_argument("--mixes", help="comma-separated mix grid, e.g. 0,0.5,1")
    p_sweep.add_argument("--out", help="sweep table CSV path")
    p_sweep.add_argument("--plot-out",
                         help="long-format CSV for plotting (default: <out>_long.csv)")

    p_insp = sub.add_parser("inspect", help="summarize a saved model")
    p_insp.add_argument("--config", help="JSON file of option defaults")
    p_insp.add_argument("--model", help="model JSON path")
    p_insp.add_argument("--round-tol", type=float, default=1e-4,
                        help="rounding grid for hyperplane counting")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold --config JSON values in as parser defaults; flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not known.config:
        return argv
    with open(known.config, encoding="utf-8") as fh:
        loaded = json.load(fh)
    if not isinstance(loaded, dict):
        raise ValueError(f"{known.config}: config must be a JSON object")
    sub_action = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    sub_parser = sub_action.choices[argv[0]]
    valid = {a.dest for a in sub_parser._actions}
    defaults = {}
    for key, value in loaded.items():
        dest = key.replace("-", "_")
        if dest not in valid:
            raise ValueError(f"{known.config}: unknown option {key!r} for {argv[0]}")
        defaults[dest] = value
    sub_parser.set_defaults(**defaults)
    return argv


def _require(args, names: list[str]) -> None:
    for name in names:
        if getattr(args, name, None) in (None, ""):
            raise ValueError(f"missing required option --{name.replace('_', '-')}")


def _dataset_from_args(args):
    _require(args, ["data", "target"])
    categorical = set(args.categorical or [])
    ignore = set(args.ignore or [])
    with open(args.data, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        from .errors import EmptyFile

        raise EmptyFile(f"{args.data}: file is empty")
    specs = [ColumnSpec(args.target, ColumnRole.TARGET)]
    for name in header:
        if name == args.target:
            continue
        if name in ignore:
            specs.append(ColumnSpec(name, ColumnRole.IGNORE))
        elif name in categorical:
            specs.append(ColumnSpec(name, ColumnRole.CATEGORICAL))
        else:
            specs.append(ColumnSpec(name, ColumnRole.NUMERIC))
    return load_csv(args.data, specs)


def _config_from_args(args) -> FitConfig:
    return FitConfig(
        lam=float(args.lam),
        mix=float(args.mix),
        monotone=bool(args.monotone),
        standardize=bool(args.standardize),
        solver_tol=float(args.tol),
        max_iter=int(args.max_iter),
        gauge_ridge=float(args.gauge_ridge),
    )


def _zero_concave_like(surface: ComponentSurface) -> ComponentSurface:
    zero = tuple(
        AffinePiece(0.0, np.zeros(surface.dim)) for _ in range(surface.n_pieces)
    )
    return ComponentSurface(Curvature.CONCAVE, zero)


def _report_payload(variant: str, config: FitConfig, report, n: int, d: int) -> dict:
    return {
        "variant": variant,
        "config": config.to_dict(),
        "n": n,
        "d": d,
        "metrics": {
            "rmse": report.rmse,
            "mae": report.mae,
            "ratio": report.ratio,
            "hyperplanes": report.hyperplane_count,
        },
        "solver": {
            "status": report.solver_status.value,
            "iterations": report.iterations,
            "primal_residual": report.primal_residual,
            "dual_residual": report.dual_residual,
        },
    }


def _print_fit_summary(payload: dict) -> None:
    m = payload["metrics"]
    s = payload["solver"]
    print(f"variant      {payload['variant']}")
    print(f"n, d         {payload['n']}, {payload['d']}")
    print(f"rmse         {_fmt(m['rmse'])}")
    print(f"mae          {_fmt(m['mae'])}")
    print(f"rmse/mae     {_fmt(m['ratio'])}")
    print(f"hyperplanes  {m['hyperplanes']}")
    print(f"status       {s['status']} ({s['iterations']} iterations)")


def _cmd_synth(args) -> int:
    _require(args, ["out"])
    dataset = generate_synthetic(int(args.n), int(args.seed), float(args.noise_sd))
    write_dataset_csv(dataset, args.out)
    print(f"wrote {dataset.n} rows x {dataset.d + 1} columns to {args.out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    _require(args, ["model_out"])
    dataset = _dataset_from_args(args)
    config = _config_from_args(args)
    variant = Variant(args.variant)
    fitters = {
        Variant.CNLS: fit_cnls,
        Variant.MNLS: fit_mnls,
        Variant.ICCNLS: fit_iccnls,
    }
    exit_code = EXIT_OK
    try:
        result, report = fitters[variant](
            dataset, config, round_tol=float(args.round_tol)
        )
    except SolverFailed as exc:
        result, report = exc.model, exc.report
        exit_code = EXIT_MAX_ITER
        _error(str(exc))
    if variant is Variant.CNLS:
        model = IccnlsModel(
            concave=_zero_concave_like(result),
            convex=result,
            d=dataset.d,
            train_fingerprint=dataset.fingerprint(),
            config_used=config,
            feature_names=dataset.feature_names,
        )
    else:
        model = result
    save_model(model, args.model_out)
    payload = _report_payload(variant.value, config, report, dataset.n, dataset.d)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    _print_fit_summary(payload)
    return exit_code


def _cmd_predict(args) -> int:
    _require(args, ["model", "input", "out"])
    model = load_model(args.model)
    points = load_points_csv(args.input, model.feature_names)
    g_c, g_v, y_hat = predict_batch(model, points)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["g_concave", "g_convex", "prediction"])
        for a, b, c in zip(g_c, g_v, y_hat):
            writer.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
    print(f"wrote {len(y_hat)} predictions to {args.out}")
    return EXIT_OK


def _parse_grid(text: str, label: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"cannot parse --{label} value {text!r}") from exc
    if not values:
        raise ValueError(f"--{label} produced an empty grid")
    return values


def _cmd_sweep(args) -> int:
    _require(args, ["lambdas", "mixes", "out"])
    dataset = _dataset_from_args(args)
    base = _config_from_args(args)
    lambdas = _parse_grid(args.lambdas, "lambdas")
    mixes = _parse_grid(args.mixes, "mixes")
    rows = sweep(dataset, lambdas, mixes, base, round_tol=float(args.round_tol))

    header = ["lambda", "mix", "ratio", "rmse", "mae", "hyperplanes", "status"]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    repr(row.lam),
                    repr(row.mix),
                    "n.a." if row.ratio is None else repr(row.ratio),
                    "" if row.rmse is None else repr(row.rmse),
                    "" if row.mae is None else repr(row.mae),
                    "" if row.hyperplane_count is None else row.hyperplane_count,
                    row.status,
                ]
            )

    plot_out = args.plot_out or f"{args.out.removesuffix('.csv')}_long.csv"
    with open(plot_out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "mix", "metric", "value"])
        for row in rows:
            for metric, value in (
                ("rmse", row.rmse),
                ("mae", row.mae),
                ("ratio", row.ratio),
                ("hyperplanes", row.hyperplane_count),
            ):
                if value is None:
                    continue
                writer.writerow([repr(row.lam), repr(row.mix), metric, repr(float(value))])

    widths = [10, 8, 10, 12, 12, 12, 10]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        cells = [
            _fmt(row.lam),
            _fmt(row.mix),
            _fmt(row.ratio),
            _fmt(row.rmse) if row.rmse is not None else "",
            _fmt(row.mae) if row.mae is not None else "",
            str(row.hyperplane_count) if row.hyperplane_count is not None else "",
            row.status,
        ]
        print("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    return EXIT_OK


def _cmd_inspect(args) -> int:
    _require(args, ["model"])
    model = load_model(args.model)
    counts = component_hyperplane_counts(model, float(args.round_tol))
    print(f"model version      iccnls-model/1")
    print(f"dimension          {model.d}")
    print(f"pieces/component   {model.n_pieces}")
    print(f"features           {', '.join(model.feature_names)}")
    print(f"train fingerprint  {model.train_fingerprint}")
    cfg = model.config_used.to_dict()
    print("config             " + ", ".join(f"{k}={_fmt(v)}" for k, v in cfg.items()))
    print(f"hyperplanes        combined={counts['combined']} "
          f"concave={counts['concave']} convex={counts['convex']} "
          f"(round tol {_fmt(float(args.round_tol))})")
    return EXIT_OK


_HANDLERS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "sweep": _cmd_sweep,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        if argv and argv[0] in _HANDLERS:
            argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except InfeasibleProblem as exc:
        _error(str(exc))
        return EXIT_INFEASIBLE
    except IccnlsError as exc:
        _error(str(exc))
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _error(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
