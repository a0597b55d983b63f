"""Composite uplift loss and analytic gradients.

The loss has two binary cross-entropy pieces: l1 scores the observed
outcome against the branch probability selected by the received treatment,
and l2 scores the observed treatment against the posterior propensity
score, a ratio of the two branch probabilities. Because the posterior
propensity depends on both branches, l2 back-propagates into both mu1 and
mu0 for every observation; nothing is stop-gradiented.

Gradients are analytic (no autodiff) and taken with respect to the
underlying coefficients theta = u - v and s = a - b; the positive-part
split only matters to the optimizer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import Hidden1Params, InteractionParams, TwinParams, _hidden_pre, twin_forward_matrix

__all__ = [
    "LossKind",
    "Gradients",
    "BatchLossResult",
    "posterior_propensity",
    "uplift_loss_batch",
    "check_gradients",
]

#: Probabilities are clamped to [CLAMP_EPS, 1 - CLAMP_EPS] inside log terms.
CLAMP_EPS = 1e-12


class LossKind(enum.Enum):
    UPLIFT = "uplift"
    LOGLIK = "loglik"
    BCE_ONLY = "bce"


@dataclass
class Gradients:
    """Gradient container congruent with the parameter layout of one arch."""

    # interaction arch
    theta0: float | None = None
    theta: np.ndarray | None = None
    # hidden1 arch
    w1: np.ndarray | None = None
    b1: np.ndarray | None = None
    s: np.ndarray | None = None
    w2: np.ndarray | None = None
    b2: float | None = None


@dataclass
class BatchLossResult:
    total: float
    l1_term: float
    l2_term: float
    grads: Gradients
    clamped: int = 0


def posterior_propensity(mu1: float, mu0: float, y: int) -> float:
    """Pr(T=1 | Y=y, x) as a function of the two branch probabilities."""
    for name, val in (("mu1", mu1), ("mu0", mu0)):
        if not 0.0 < val < 1.0:
            raise ValueError(f"{name} must lie strictly inside (0, 1), got {val}")
    if y == 1:
        return mu1 / (mu1 + mu0)
    return (1.0 - mu1) / ((1.0 - mu1) + (1.0 - mu0))


def _batch_arrays(x, t, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.asarray(t, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if t.shape != (x.shape[0],) or y.shape != (x.shape[0],):
        raise ValueError("x, t, y must have matching first dimension")
    return x, t, y


def uplift_loss_batch(
    params: TwinParams, x, t, y, kind: LossKind = LossKind.UPLIFT, l2_weight: float = 1.0
) -> BatchLossResult:
    """Mean loss over a batch plus analytic gradients for all parameters.

    ``l2_weight`` scales the treatment term relative to the outcome term;
    the default of 1 is the plain unweighted sum.
    """
    if l2_weight < 0:
        raise ValueError("l2_weight must be nonnegative")
    x, t, y = _batch_arrays(x, t, y)
    n = x.shape[0]
    mu1_raw, mu0_raw = twin_forward_matrix(params, x)
    mu1 = np.clip(mu1_raw, CLAMP_EPS, 1.0 - CLAMP_EPS)
    mu0 = np.clip(mu0_raw, CLAMP_EPS, 1.0 - CLAMP_EPS)
    clamped = int(np.count_nonzero(mu1 != mu1_raw) + np.count_nonzero(mu0 != mu0_raw))

    mut = t * mu1 + (1.0 - t) * mu0
    msum = mu1 + mu0  # = m11 + m10; (1-mu1)+(1-mu0) = 2 - msum

    # l1: outcome BCE on the branch selected by the observed treatment
    l1_obs = -(y * np.log(mut) + (1.0 - y) * np.log(1.0 - mut))
    d1_mut = -y / mut + (1.0 - y) / (1.0 - mut)
    d_mu1 = t * d1_mut
    d_mu0 = (1.0 - t) * d1_mut

    # l2: treatment BCE on the posterior propensity score
    pos = y == 1.0
    l2_obs = np.where(
        pos,
        -(t * np.log(mu1) + (1.0 - t) * np.log(mu0)) + np.log(msum),
        -(t * np.log(1.0 - mu1) + (1.0 - t) * np.log(1.0 - mu0)) + np.log(2.0 - msum),
    )
    d2_mu1 = np.where(pos, -t / mu1 + 1.0 / msum, t / (1.0 - mu1) - 1.0 / (2.0 - msum))
    d2_mu0 = np.where(
        pos, -(1.0 - t) / mu0 + 1.0 / msum, (1.0 - t) / (1.0 - mu0) - 1.0 / (2.0 - msum)
    )

    if kind is LossKind.UPLIFT:
        l1 = float(np.mean(l1_obs))
        l2 = l2_weight * float(np.mean(l2_obs))
        total = l1 + l2
        d_mu1 = d_mu1 + l2_weight * d2_mu1
        d_mu0 = d_mu0 + l2_weight * d2_mu0
    elif kind is LossKind.BCE_ONLY:
        l1 = float(np.mean(l1_obs))
        l2 = 0.0
        total = l1
    elif kind is LossKind.LOGLIK:
        # log-likelihood form: the outcome piece uses the mixture probability
        # (m11+m10) / (m01+m00) instead of the observed branch
        l1_ll = -(y * np.log(msum) + (1.0 - y) * np.log(2.0 - msum))
        l1 = float(np.mean(l1_ll))
        l2 = l2_weight * float(np.mean(l2_obs))
        total = l1 + l2
        dll = -y / msum + (1.0 - y) / (2.0 - msum)
        d_mu1 = dll + l2_weight * d2_mu1
        d_mu0 = dll + l2_weight * d2_mu0
    else:  # pragma: no cover
        raise ValueError(f"unknown loss kind {kind!r}")

    g1 = d_mu1 * mu1 * (1.0 - mu1) / n
    g0 = d_mu0 * mu0 * (1.0 - mu0) / n
    grads = _backprop(params, x, g1, g0)
    return BatchLossResult(total=total, l1_term=l1, l2_term=l2, grads=grads, clamped=clamped)


def _backprop(params: TwinParams, x: np.ndarray, g1: np.ndarray, g0: np.ndarray) -> Gradients:
    """Accumulate dL/dz over both branches into parameter space.

    g1, g0 are dL/dz for the t=1 and t=0 branch of every observation.
    """
    if isinstance(params, InteractionParams):
        p = params.p
        gsum = g1 + g0
        theta = np.empty(2 * p + 1)
        theta[:p] = x.T @ gsum
        theta[p : 2 * p] = x.T @ g1  # interaction block only sees t=1
        theta[2 * p] = g1.sum()
        return Gradients(theta0=float(gsum.sum()), theta=theta)

    assert isinstance(params, Hidden1Params)
    s, w2 = params.s, params.w2
    d_w1 = np.zeros_like(params.w1u)
    d_b1 = np.zeros(params.m)
    d_s = np.zeros(params.m)
    d_w2 = np.zeros(params.m)
    d_b2 = 0.0
    for tval, g in ((1.0, g1), (0.0, g0)):
        pre = _hidden_pre(params, x, tval)
        r = s * pre
        h = np.maximum(r, 0.0)
        dh = g[:, None] * w2
        act = r > 0.0
        # subgradient at the kink is 0, except for a pruned node (s == 0)
        # where the one-sided derivative in s lets the node revive when
        # lambda1 = 0
        act_s = np.where(s == 0.0, pre > 0.0, act)
        d_s += np.sum(dh * act_s * pre, axis=0)
        dpre = dh * act * s
        d_b1 += dpre.sum(axis=0)
        d_w1[: params.p] += x.T @ dpre
        d_w1[params.p] += tval * dpre.sum(axis=0)
        d_w2 += h.T @ g
        d_b2 += g.sum()
    return Gradients(w1=d_w1, b1=d_b1, s=d_s, w2=d_w2, b2=float(d_b2))


def _grad_coords(params: TwinParams, grads: Gradients):
    """Yield (perturb, analytic, kinkable_node) triples for every coordinate.

    perturb(p, h) shifts the underlying theta/s value by h (through the
    positive split where applicable); kinkable_node is the hidden node index
    whose ReLU argument the coordinate can move, or None.
    """
    if isinstance(params, InteractionParams):
        yield (lambda pp, h: setattr(pp, "theta0", pp.theta0 + h), grads.theta0, None)
        for j in range(2 * params.p + 1):
            def bump(pp, h, j=j):
                pp.u[j] += h
            yield (bump, grads.theta[j], None)
        return
    for j in range(params.p + 1):
        for k in range(params.m):
            def bump_w1(pp, h, j=j, k=k):
                pp.w1u[j, k] += h
            yield (bump_w1, grads.w1[j, k], k)
    for k in range(params.m):
        def bump_b1(pp, h, k=k):
            pp.b1[k] += h
        yield (bump_b1, grads.b1[k], k)
    for k in range(params.m):
        def bump_a(pp, h, k=k):
            pp.a[k] += h
        yield (bump_a, grads.s[k], k)
    for k in range(params.m):
        def bump_w2(pp, h, k=k):
            pp.w2u[k] += h
        yield (bump_w2, grads.w2[k], None)
    yield (lambda pp, h: setattr(pp, "b2", pp.b2 + h), grads.b2, None)


def _kink_mask(params: TwinParams, x: np.ndarray, h: float) -> np.ndarray | None:
    """Nodes whose ReLU argument could cross zero under a +/-h perturbation."""
    if not isinstance(params, Hidden1Params):
        return None
    pre = _hidden_pre(params, x, 1.0)
    pre0 = _hidden_pre(params, x, 0.0)
    s = params.s
    xmax = max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0
    window = 2.0 * h * (1.0 + np.abs(s)) * (1.0 + xmax)
    masked = np.zeros(params.m, dtype=bool)
    for pr in (pre, pre0):
        r = np.abs(s * pr)
        masked |= np.any(r <= window, axis=0)
    masked |= np.abs(s) <= 2.0 * h
    return masked


def check_gradients(params: TwinParams, x, t, y, kind: LossKind = LossKind.UPLIFT, h: float = 1e-5) -> float:
    """Max relative error of the analytic gradient against central finite
    differences over every parameter coordinate (kink coordinates excluded)."""
    x, t, y = _batch_arrays(x, t, y)
    res = uplift_loss_batch(params, x, t, y, kind)
    masked = _kink_mask(params, x, h)
    max_err = 0.0
    for perturb, analytic, node in _grad_coords(params, res.grads):
        if node is not None and masked is not None and masked[node]:
            continue
        pp = params.copy()
        perturb(pp, +h)
        lp = uplift_loss_batch(pp, x, t, y, kind).total
        pp = params.copy()
        perturb(pp, -h)
        lm = uplift_loss_batch(pp, x, t, y, kind).total
        numeric = (lp - lm) / (2.0 * h)
        err = abs(analytic - numeric) / max(1.0, abs(numeric))
        max_err = max(max_err, err)
    return max_err
