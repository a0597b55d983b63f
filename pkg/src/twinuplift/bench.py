"""Experiment harness: dataset CSV I/O, splitting, grid search on validation
adjusted Qini, and repeated-seed benchmarking with mean +/- SE reporting.

The test partition is touched only by the final scoring call; grid search
never sees it. Repetitions and grid cells are independent tasks, so they can
run in parallel (worker count capped by the UPLIFTLAB_THREADS environment
variable, 0 = auto); results are sorted by (run, method) before aggregation
so the output is deterministic regardless of scheduling.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dgp import SCENARIOS, Dataset, generate_dataset
from .loss import LossKind
from .model import (
    Hidden1Params,
    TwinParams,
    active_nodes,
    init_hidden1,
    init_interaction,
    predict_uplift,
)
from .optim import RegKind, TrainConfig, TrainingDiverged, train
from .qini import QiniReport, adjusted_qini, evaluate_predictions

__all__ = [
    "MethodSpec",
    "ExperimentSpec",
    "HyperGrid",
    "BenchmarkRow",
    "GridSearchResult",
    "load_csv",
    "save_csv",
    "split",
    "train_early_stop",
    "grid_search",
    "run_benchmark",
    "write_benchmark_artifacts",
    "worker_count",
]


# ---------------------------------------------------------------------------
# dataset CSV I/O


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset as x1..xp,t,y[,u_true] with round-trip precision."""
    p = dataset.p
    header = [f"x{j + 1}" for j in range(p)] + ["t", "y"]
    if dataset.u_true is not None:
        header.append("u_true")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [f"{v:.17g}" for v in dataset.x[i]]
            row.append(str(int(dataset.t[i])))
            row.append(str(int(dataset.y[i])))
            if dataset.u_true is not None:
                row.append(f"{dataset.u_true[i]:.17g}")
            writer.writerow(row)


def load_csv(path) -> Dataset:
    """Load a dataset CSV; the u_true column is optional."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)

    has_u = header[-1] == "u_true" if header else False
    core = header[:-1] if has_u else header
    if len(core) < 3 or core[-2:] != ["t", "y"]:
        raise ValueError(f"{path}: header must be x1,...,xp,t,y[,u_true], got {header!r}")
    p = len(core) - 2
    expected = [f"x{j + 1}" for j in range(p)]
    if core[:p] != expected:
        raise ValueError(f"{path}: covariate columns must be named x1..x{p}")

    n = len(rows)
    x = np.empty((n, p))
    t = np.empty(n)
    y = np.empty(n)
    u = np.empty(n) if has_u else None
    width = len(header)
    for i, row in enumerate(rows):
        rownum = i + 2  # 1-based, after the header
        if len(row) != width:
            raise ValueError(f"{path}: row {rownum} has {len(row)} fields, expected {width}")
        try:
            x[i] = [float(v) for v in row[:p]]
            t[i] = float(row[p])
            y[i] = float(row[p + 1])
            if has_u:
                u[i] = float(row[p + 2])
        except ValueError as exc:
            raise ValueError(f"{path}: row {rownum}: {exc}") from None
        if t[i] not in (0.0, 1.0):
            raise ValueError(f"{path}: row {rownum}, column t: value {row[p]!r} is not binary")
        if y[i] not in (0.0, 1.0):
            raise ValueError(f"{path}: row {rownum}, column y: value {row[p + 1]!r} is not binary")
    return Dataset(x, t, y, u_true=u)


# ---------------------------------------------------------------------------
# splitting


def split(dataset: Dataset, fractions=(0.4, 0.3, 0.3), seed: int = 0):
    """Random (train, valid, test) partition; remainder rows go to train."""
    f_tr, f_va, f_te = fractions
    if min(f_tr, f_va, f_te) <= 0 or abs(f_tr + f_va + f_te - 1.0) > 1e-9:
        raise ValueError("split fractions must be positive and sum to 1")
    n = dataset.n
    n_va = math.floor(f_va * n)
    n_te = math.floor(f_te * n)
    n_tr = n - n_va - n_te
    if min(n_tr, n_va, n_te) < 1:
        raise ValueError(f"n={n} too small for three nonempty parts")
    perm = np.random.default_rng(np.random.SeedSequence(seed)).permutation(n)
    return (
        dataset.subset(perm[:n_tr]),
        dataset.subset(perm[n_tr : n_tr + n_va]),
        dataset.subset(perm[n_tr + n_va :]),
    )


# ---------------------------------------------------------------------------
# experiment specification


@dataclass(frozen=True)
class HyperGrid:
    etas: tuple = (0.005, 0.01, 0.05, 0.1, 0.2, 0.3)
    lambda1s: tuple = (0.0, 0.0001, 0.0005, 0.001, 0.005, 0.01)
    lambda2s: tuple = (0.0, 0.0001, 0.0005, 0.001, 0.005, 0.01)

    def __post_init__(self):
        if not (self.etas and self.lambda1s and self.lambda2s):
            raise ValueError("grid axes must be nonempty")


@dataclass(frozen=True)
class MethodSpec:
    label: str
    arch: str = "interaction"  # "interaction" | "hidden1"
    hidden: int = 32
    loss: LossKind = LossKind.UPLIFT
    reg_kind: RegKind = RegKind.L1
    structured: bool = True  # only meaningful for hidden1

    def __post_init__(self):
        if self.arch not in ("interaction", "hidden1"):
            raise ValueError(f"unknown architecture {self.arch!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    methods: tuple
    scenario: int | None = None
    data_path: str | None = None
    fractions: tuple = (0.4, 0.3, 0.3)
    repetitions: int = 20
    grid: HyperGrid = field(default_factory=HyperGrid)
    epochs: int = 100
    batch_size: int = 256
    patience: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if (self.scenario is None) == (self.data_path is None):
            raise ValueError("exactly one of scenario or data_path must be set")
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        f = self.fractions
        if len(f) != 3 or min(f) <= 0 or abs(sum(f) - 1.0) > 1e-9:
            raise ValueError("fractions must be three positive values summing to 1")
        if not self.methods:
            raise ValueError("at least one method is required")


@dataclass
class GridSearchResult:
    config: TrainConfig
    params: TwinParams
    valid_q_adj: float
    cell_index: int
    diagnostics: list


@dataclass
class BenchmarkRow:
    label: str
    config: TrainConfig  # selection of the final repetition
    q_adj: list  # per-repetition test values
    mean: float
    se: float
    mean_active_nodes: float | None
    per_run_configs: list


# ---------------------------------------------------------------------------
# training with early stopping on validation adjusted Qini


def train_early_stop(params, train_ds, valid_ds, cfg: TrainConfig, patience: int = 10):
    """Train with a per-epoch validation q_adj plateau check (seed-determined
    batching); returns the parameters of the best validation epoch."""
    best = {"q": -np.inf, "params": params.copy(), "since": 0}

    def on_epoch(epoch, cur, trace):
        rep = evaluate_predictions(predict_uplift(cur, valid_ds.x), valid_ds.t, valid_ds.y)
        if rep.q_adj > best["q"]:
            best["q"] = rep.q_adj
            best["params"] = cur.copy()
            best["since"] = 0
        else:
            best["since"] += 1
        return best["since"] > patience

    final, trace = train(params, train_ds, cfg, on_epoch=on_epoch)
    if not np.isfinite(best["q"]):
        return final, trace, -np.inf
    return best["params"], trace, best["q"]


def _init_params(method: MethodSpec, p: int, seed: int) -> TwinParams:
    if method.arch == "interaction":
        return init_interaction(p)
    return init_hidden1(p, method.hidden, seed)


def _grid_cells(method: MethodSpec, grid: HyperGrid):
    lambda1s = grid.lambda1s if (method.arch == "hidden1" and method.structured) else (0.0,)
    return list(itertools.product(grid.etas, lambda1s, grid.lambda2s))


def grid_search(
    spec: ExperimentSpec, method: MethodSpec, train_ds: Dataset, valid_ds: Dataset, seed: int
) -> GridSearchResult:
    """Train one model per grid cell, score validation q_adj, return the
    argmax (ties: smaller lambda2, smaller lambda1, smaller eta, first cell)."""
    cells = _grid_cells(method, spec.grid)
    best = None
    best_key = None
    diagnostics = []
    for idx, (eta, lam1, lam2) in enumerate(cells):
        cfg = TrainConfig(
            eta=eta,
            lambda1=lam1,
            lambda2=lam2,
            reg_kind=method.reg_kind,
            batch_size=spec.batch_size,
            epochs=spec.epochs,
            seed=seed,
            loss=method.loss,
        )
        params0 = _init_params(method, train_ds.p, seed)
        try:
            fitted, _, q_adj = train_early_stop(params0, train_ds, valid_ds, cfg, spec.patience)
        except TrainingDiverged as exc:
            diagnostics.append(f"cell {idx} (eta={eta}, l1={lam1}, l2={lam2}): {exc}")
            continue
        key = (-q_adj, lam2, lam1, eta, idx)
        if best_key is None or key < best_key:
            best_key = key
            best = GridSearchResult(cfg, fitted, q_adj, idx, diagnostics)
    if best is None:
        raise RuntimeError("all grid cells diverged: " + "; ".join(diagnostics))
    best.diagnostics = diagnostics
    return best


# ---------------------------------------------------------------------------
# repeated benchmark


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get("UPLIFTLAB_THREADS", "1")
    try:
        w = int(raw)
    except ValueError:
        raise ValueError(f"UPLIFTLAB_THREADS must be an integer, got {raw!r}") from None
    if w == 0:
        w = os.cpu_count() or 1
    return max(1, min(w, n_tasks))


def _run_dataset(spec: ExperimentSpec, seed: int) -> Dataset:
    if spec.scenario is not None:
        return generate_dataset(SCENARIOS[spec.scenario], seed)
    return load_csv(spec.data_path)


def _benchmark_task(args):
    """One (repetition, method) unit: split, grid-search, score on test."""
    spec, mi, run = args
    method = spec.methods[mi]
    seed = spec.base_seed + run
    dataset = _run_dataset(spec, seed)
    train_ds, valid_ds, test_ds = split(dataset, spec.fractions, seed)
    result = grid_search(spec, method, train_ds, valid_ds, seed)
    report = evaluate_predictions(predict_uplift(result.params, test_ds.x), test_ds.t, test_ds.y)
    m_hat = active_nodes(result.params) if isinstance(result.params, Hidden1Params) else None
    return (run, mi, result.config, report, m_hat, result.params)


def run_benchmark(spec: ExperimentSpec):
    """Run the repeated experiment; returns (rows, final_reports).

    rows is one BenchmarkRow per method; final_reports maps method label to
    the QiniReport of its last repetition (for curve artifacts).
    """
    tasks = [(spec, mi, run) for run in range(1, spec.repetitions + 1) for mi in range(len(spec.methods))]
    workers = worker_count(len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_benchmark_task, tasks))
    else:
        outputs = [_benchmark_task(task) for task in tasks]
    outputs.sort(key=lambda item: (item[0], item[1]))

    rows = []
    final_reports = {}
    for mi, method in enumerate(spec.methods):
        picked = [o for o in outputs if o[1] == mi]
        q_adj = [o[3].q_adj for o in picked]
        m_hats = [o[4] for o in picked if o[4] is not None]
        mean = float(np.mean(q_adj))
        se = float(np.std(q_adj, ddof=1) / math.sqrt(len(q_adj))) if len(q_adj) > 1 else 0.0
        rows.append(
            BenchmarkRow(
                label=method.label,
                config=picked[-1][2],
                q_adj=q_adj,
                mean=mean,
                se=se,
                mean_active_nodes=float(np.mean(m_hats)) if m_hats else None,
                per_run_configs=[o[2] for o in picked],
            )
        )
        final_reports[method.label] = picked[-1][3]
    return rows, final_reports


def write_benchmark_artifacts(spec: ExperimentSpec, rows, final_reports, out_dir, plot: bool = True):
    """Emit summary CSV, per-run CSV, Qini-curve CSVs of the last repetition,
    and (optionally) the matching figures."""
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "eta", "lambda1", "lambda2", "reg", "loss", "mean_q_adj", "se_q_adj", "mean_active_nodes"]
        )
        for row in rows:
            cfg = row.config
            writer.writerow(
                [
                    row.label,
                    f"{cfg.eta:.17g}",
                    f"{cfg.lambda1:.17g}",
                    f"{cfg.lambda2:.17g}",
                    cfg.reg_kind.value,
                    cfg.loss.value,
                    f"{row.mean:.17g}",
                    f"{row.se:.17g}",
                    "" if row.mean_active_nodes is None else f"{row.mean_active_nodes:.17g}",
                ]
            )
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "method", "q_adj", "eta", "lambda1", "lambda2"])
        for row in rows:
            for r, (q, cfg) in enumerate(zip(row.q_adj, row.per_run_configs), start=1):
                writer.writerow(
                    [r, row.label, f"{q:.17g}", f"{cfg.eta:.17g}", f"{cfg.lambda1:.17g}", f"{cfg.lambda2:.17g}"]
                )
    best_label = max(rows, key=lambda r: r.q_adj[-1]).label
    report = final_reports[best_label]
    from .qini import report_to_csv

    report_to_csv(
        report,
        os.path.join(out_dir, "qini_curve.csv"),
        os.path.join(out_dir, "qini_scalars.csv"),
    )
    if plot:
        from .plots import save_benchmark_figure, save_qini_figure

        save_qini_figure(report, os.path.join(out_dir, "qini_curve.png"), title=best_label)
        save_benchmark_figure(rows, os.path.join(out_dir, "summary.png"))
    return summary_path
