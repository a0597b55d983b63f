"""Mini-batch proximal SGD with positive-part-split sparsity.

Weights use a lasso proximal step (exact zeros), scaling factors use the
same step with their own constant, which prunes whole hidden nodes.
Intercepts always take plain gradient steps and are never penalized.

Two step variants are provided. The default canonical variant applies the
exact soft-threshold proximal operator to theta = u - v and re-splits, so
u + v = |theta| stays tight and a zero penalty reduces to plain SGD. The
strict variant updates u and v independently (gradient step on each
component followed by a ReLU projection), which can inflate u + v above
|theta| and double the effective step when neither projection binds; it is
kept behind a flag for A/B comparison. The crossed flag additionally swaps
the two projected intermediates in the structured step, which reverses the
descent direction on s under nonzero gradient; it exists only to
demonstrate that behavior.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .dgp import Dataset
from .loss import LossKind, uplift_loss_batch
from .model import Hidden1Params, InteractionParams, TwinParams, active_nodes

__all__ = [
    "RegKind",
    "TrainConfig",
    "TrainTrace",
    "TrainingDiverged",
    "prox_lasso_step",
    "prox_structured_step",
    "train",
    "trace_to_csv",
]


class RegKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    NONE = "none"


@dataclass(frozen=True)
class TrainConfig:
    eta: float
    lambda1: float = 0.0
    lambda2: float = 0.0
    reg_kind: RegKind = RegKind.L1
    batch_size: int = 256
    epochs: int = 100
    seed: int = 0
    loss: LossKind = LossKind.UPLIFT
    strict_prox: bool = False
    crossed_structured: bool = False

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularization constants must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


@dataclass
class TrainTrace:
    """Per-epoch training statistics."""

    loss: list[float] = field(default_factory=list)
    l1: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    active_nodes: list[int | None] = field(default_factory=list)
    zero_weights: list[int] = field(default_factory=list)
    clamped: int = 0

    def __len__(self):
        return len(self.loss)


class TrainingDiverged(RuntimeError):
    """Raised when the batch loss goes non-finite; carries the parameters of
    the last epoch that completed with finite losses."""

    def __init__(self, message, params, trace):
        super().__init__(message)
        self.params = params
        self.trace = trace


def prox_lasso_step(u, v, grad, eta, lam, strict: bool = False):
    """One proximal update of a split coefficient theta = u - v.

    Canonical mode: soft-threshold theta - eta*grad at eta*lam, stored in
    canonical split form. Strict mode: the raw two-component update
    u <- ReLU(u - eta*(lam + grad)), v <- ReLU(v - eta*(lam - grad)).
    Returns (u', v', theta').
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if strict:
        un = np.maximum(u - eta * (lam + grad), 0.0)
        vn = np.maximum(v - eta * (lam - grad), 0.0)
        return un, vn, un - vn
    th = (u - v) - eta * grad
    un = np.maximum(th - eta * lam, 0.0)
    vn = np.maximum(-th - eta * lam, 0.0)
    return un, vn, un - vn


def prox_structured_step(a, b, grad_s, eta, lambda1, strict: bool = False, crossed: bool = False):
    """Proximal update of a split scaling factor s = a - b.

    Same algebra as :func:`prox_lasso_step`; the node is pruned (s' = 0)
    exactly when both intermediates project to zero. ``crossed`` swaps the
    projected intermediates between a and b as a debug variant.
    """
    if crossed:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        grad_s = np.asarray(grad_s, dtype=float)
        at = a - eta * (lambda1 + grad_s)
        bt = b - eta * (lambda1 - grad_s)
        an = np.maximum(bt, 0.0)
        bn = np.maximum(at, 0.0)
        return an, bn, an - bn
    return prox_lasso_step(a, b, grad_s, eta, lambda1, strict=strict)


def _apply_updates(params: TwinParams, grads, cfg: TrainConfig) -> None:
    """In-place parameter update from one batch gradient."""
    eta = cfg.eta
    if cfg.reg_kind is RegKind.L1:
        lam_w = cfg.lambda2
        decay = 0.0
    elif cfg.reg_kind is RegKind.L2:
        lam_w = 0.0
        decay = cfg.lambda2
    else:
        lam_w = 0.0
        decay = 0.0

    if isinstance(params, InteractionParams):
        g = grads.theta + decay * params.theta
        params.u, params.v, _ = prox_lasso_step(params.u, params.v, g, eta, lam_w, cfg.strict_prox)
        params.theta0 -= eta * grads.theta0
    else:
        assert isinstance(params, Hidden1Params)
        g1 = grads.w1 + decay * params.w1
        params.w1u, params.w1v, _ = prox_lasso_step(
            params.w1u, params.w1v, g1, eta, lam_w, cfg.strict_prox
        )
        g2 = grads.w2 + decay * params.w2
        params.w2u, params.w2v, _ = prox_lasso_step(
            params.w2u, params.w2v, g2, eta, lam_w, cfg.strict_prox
        )
        params.a, params.b, _ = prox_structured_step(
            params.a, params.b, grads.s, eta, cfg.lambda1, cfg.strict_prox, cfg.crossed_structured
        )
        params.b1 -= eta * grads.b1
        params.b2 -= eta * grads.b2

    if __debug__:
        if isinstance(params, InteractionParams):
            assert np.all(params.u >= 0) and np.all(params.v >= 0)
        else:
            for arr in (params.w1u, params.w1v, params.a, params.b, params.w2u, params.w2v):
                assert np.all(arr >= 0)


def _zero_weight_count(params: TwinParams) -> int:
    if isinstance(params, InteractionParams):
        return int(np.count_nonzero(params.theta == 0.0))
    return int(np.count_nonzero(params.w1 == 0.0) + np.count_nonzero(params.w2 == 0.0))


def train(
    params: TwinParams, data: Dataset, cfg: TrainConfig, on_epoch=None
) -> tuple[TwinParams, TrainTrace]:
    """Run epochs of shuffled mini-batch proximal SGD; returns new params.

    The input params are not modified. Deterministic for a fixed config.
    ``on_epoch(epoch, params, trace)`` may return True to stop early.
    """
    params = params.copy()
    trace = TrainTrace()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    n = data.n
    snapshot = params.copy()
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        tot = tot1 = tot2 = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            res = uplift_loss_batch(params, data.x[idx], data.t[idx], data.y[idx], cfg.loss)
            if not np.isfinite(res.total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch starting at {start}",
                    snapshot,
                    trace,
                )
            trace.clamped += res.clamped
            tot += res.total * idx.size
            tot1 += res.l1_term * idx.size
            tot2 += res.l2_term * idx.size
            _apply_updates(params, res.grads, cfg)
        trace.loss.append(tot / n)
        trace.l1.append(tot1 / n)
        trace.l2.append(tot2 / n)
        trace.active_nodes.append(
            active_nodes(params) if isinstance(params, Hidden1Params) else None
        )
        trace.zero_weights.append(_zero_weight_count(params))
        snapshot = params.copy()
        if on_epoch is not None and on_epoch(epoch, params, trace):
            break
    return params, trace


def trace_to_csv(trace: TrainTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "l1", "l2", "active_nodes", "zero_weights"])
        for i in range(len(trace)):
            m = trace.active_nodes[i]
            writer.writerow(
                [
                    i,
                    f"{trace.loss[i]:.17g}",
                    f"{trace.l1[i]:.17g}",
                    f"{trace.l2[i]:.17g}",
                    "" if m is None else m,
                    trace.zero_weights[i],
                ]
            )
