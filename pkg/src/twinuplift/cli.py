"""Command-line interface: generate / train / evaluate / benchmark.

Exit code 0 on success; on failure a single diagnostic line of the form
``error: <message>`` goes to stderr and the exit code is 1.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    ExperimentSpec,
    HyperGrid,
    MethodSpec,
    load_csv,
    run_benchmark,
    save_csv,
    write_benchmark_artifacts,
)
from .dgp import SCENARIOS, generate_dataset
from .loss import LossKind
from .model import init_hidden1, init_interaction, load_params, predict_uplift, save_params
from .optim import RegKind, TrainConfig, trace_to_csv, train
from .qini import evaluate_predictions, report_to_csv

_LOSSES = {"uplift": LossKind.UPLIFT, "bce": LossKind.BCE_ONLY, "loglik": LossKind.LOGLIK}
_REGS = {"l1": RegKind.L1, "l2": RegKind.L2, "none": RegKind.NONE}

#: Benchmark method presets selectable with --methods.
METHOD_PRESETS = {
    "twin-interaction": MethodSpec("twin-interaction", arch="interaction", loss=LossKind.UPLIFT),
    "logistic": MethodSpec("logistic", arch="interaction", loss=LossKind.BCE_ONLY),
    "twin-nn": MethodSpec("twin-nn", arch="hidden1", hidden=128, loss=LossKind.UPLIFT),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twinuplift")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic scenario dataset as CSV")
    gen.add_argument("--scenario", type=int, required=True, choices=sorted(SCENARIOS))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    tr = sub.add_parser("train", help="fit one model on a dataset CSV")
    tr.add_argument("--data", required=True)
    tr.add_argument("--arch", choices=["interaction", "hidden1"], default="interaction")
    tr.add_argument("--hidden", type=int, default=32, help="hidden nodes (hidden1 arch)")
    tr.add_argument("--loss", choices=sorted(_LOSSES), default="uplift")
    tr.add_argument("--eta", type=float, default=0.1)
    tr.add_argument("--lambda1", type=float, default=0.0)
    tr.add_argument("--lambda2", type=float, default=0.0)
    tr.add_argument("--reg", choices=sorted(_REGS), default="l1")
    tr.add_argument("--epochs", type=int, default=100)
    tr.add_argument("--batch-size", type=int, default=256)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--model-out", required=True)
    tr.add_argument("--trace-out", help="optional per-epoch training trace CSV")
    tr.add_argument("--no-plot", action="store_true")

    ev = sub.add_parser("evaluate", help="score a fitted model on a dataset CSV")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--bins", type=int, default=10, help="Kendall bins K")
    ev.add_argument("--grid", type=int, default=20, help="Qini grid bins J")
    ev.add_argument("--report-out", required=True, help="output path prefix")
    ev.add_argument("--no-plot", action="store_true")

    be = sub.add_parser("benchmark", help="repeated-seed benchmark with grid search")
    src = be.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", type=int, choices=sorted(SCENARIOS))
    src.add_argument("--data")
    be.add_argument("--runs", type=int, default=20)
    be.add_argument("--grid-file", help="hyperparameter grid, one 'key = v1,v2' line each")
    be.add_argument("--methods", default="twin-interaction,logistic")
    be.add_argument("--epochs", type=int, default=100)
    be.add_argument("--batch-size", type=int, default=256)
    be.add_argument("--patience", type=int, default=10)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--out-dir", required=True)
    be.add_argument("--no-plot", action="store_true")
    return parser


def parse_grid_file(path) -> HyperGrid:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected 'key = values'")
            key, _, rest = line.partition("=")
            key = key.strip()
            if key not in ("eta", "lambda1", "lambda2"):
                raise ValueError(f"{path}: line {lineno}: unknown hyperparameter {key!r}")
            try:
                values[key] = tuple(float(v) for v in rest.split(","))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad value list {rest.strip()!r}") from None
    grid = HyperGrid()
    return HyperGrid(
        etas=values.get("eta", grid.etas),
        lambda1s=values.get("lambda1", grid.lambda1s),
        lambda2s=values.get("lambda2", grid.lambda2s),
    )


def _cmd_generate(args) -> int:
    dataset = generate_dataset(SCENARIOS[args.scenario], args.seed)
    save_csv(dataset, args.out)
    print(f"wrote {dataset.n} rows ({dataset.p} covariates) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    data = load_csv(args.data)
    if args.arch == "interaction":
        params = init_interaction(data.p)
    else:
        params = init_hidden1(data.p, args.hidden, args.seed)
    cfg = TrainConfig(
        eta=args.eta,
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        reg_kind=_REGS[args.reg],
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        loss=_LOSSES[args.loss],
    )
    fitted, trace = train(params, data, cfg)
    save_params(fitted, args.model_out)
    if args.trace_out:
        trace_to_csv(trace, args.trace_out)
        if not args.no_plot:
            from .plots import save_trace_figure

            save_trace_figure(trace, args.trace_out + ".png")
    print(f"final loss {trace.loss[-1]:.6f}; model written to {args.model_out}")
    return 0


def _cmd_evaluate(args) -> int:
    params = load_params(args.model)
    data = load_csv(args.data)
    report = evaluate_predictions(
        predict_uplift(params, data.x), data.t, data.y, grid_bins=args.grid, kendall_bins=args.bins
    )
    prefix = args.report_out
    report_to_csv(report, prefix + "_curve.csv", prefix + "_scalars.csv")
    if not args.no_plot:
        from .plots import save_qini_figure

        save_qini_figure(report, prefix + ".png")
    print(f"q_hat={report.q_hat:.4f} rho_hat={report.rho_hat:.4f} q_adj={report.q_adj:.4f}")
    return 0


def _cmd_benchmark(args) -> int:
    try:
        methods = tuple(METHOD_PRESETS[name.strip()] for name in args.methods.split(","))
    except KeyError as exc:
        raise ValueError(f"unknown method preset {exc.args[0]!r}") from None
    grid = parse_grid_file(args.grid_file) if args.grid_file else HyperGrid()
    spec = ExperimentSpec(
        methods=methods,
        scenario=args.scenario,
        data_path=args.data,
        repetitions=args.runs,
        grid=grid,
        epochs=args.epochs,
        batch_size=args.batch_size,
        patience=args.patience,
        base_seed=args.seed,
    )
    rows, reports = run_benchmark(spec)
    write_benchmark_artifacts(spec, rows, reports, args.out_dir, plot=not args.no_plot)
    for row in rows:
        print(f"{row.label}: q_adj = {row.mean:.4f} +/- {row.se:.4f}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "benchmark": _cmd_benchmark,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
