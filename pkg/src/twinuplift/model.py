"""Twin uplift models: the sigmoid interaction model and the 1-hidden-layer
ReLU network with per-node scaling factors.

All penalized coefficients are stored in positive-part split form
(theta = u - v with u, v >= 0) so the proximal optimizer can produce exact
zeros. Intercepts are stored unsplit and are never penalized. One set of
weights serves both twin branches: the forward pass is evaluated at t=1 and
t=0 and the difference of the two sigmoids is the predicted uplift.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InteractionParams",
    "Hidden1Params",
    "TwinOutput",
    "sigmoid",
    "interaction_forward",
    "nn_forward",
    "forward",
    "twin_forward",
    "twin_forward_matrix",
    "predict_uplift",
    "construct_nn_from_interaction",
    "active_nodes",
    "init_interaction",
    "init_hidden1",
    "save_params",
    "load_params",
]

_FORMAT_VERSION = 1


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _split(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.maximum(theta, 0.0), np.maximum(-theta, 0.0)


@dataclass
class InteractionParams:
    """Sigmoid interaction model: main effects, t-by-x interactions and a
    treatment main effect, all in one coefficient vector of length 2p+1."""

    p: int
    theta0: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != (2 * self.p + 1,) or self.v.shape != (2 * self.p + 1,):
            raise ValueError("u and v must have length 2p+1")

    @property
    def theta(self) -> np.ndarray:
        return self.u - self.v

    def copy(self) -> "InteractionParams":
        return InteractionParams(self.p, self.theta0, self.u.copy(), self.v.copy())


@dataclass
class Hidden1Params:
    """1-hidden-layer ReLU network with a scaling factor per hidden node.

    The hidden pre-activation of node k is s_k * (b1_k + w1[:p, k] . x +
    w1[p, k] * t); a node with s_k == 0 contributes exactly nothing, which
    is what makes structured pruning exact.
    """

    p: int
    m: int
    w1u: np.ndarray  # (p+1, m)
    w1v: np.ndarray
    b1: np.ndarray  # (m,) unsplit, unpenalized
    a: np.ndarray  # (m,) scaling factor positive parts
    b: np.ndarray
    w2u: np.ndarray  # (m,)
    w2v: np.ndarray
    b2: float

    def __post_init__(self):
        if self.w1u.shape != (self.p + 1, self.m):
            raise ValueError("w1 must be (p+1) x m")

    @property
    def w1(self) -> np.ndarray:
        return self.w1u - self.w1v

    @property
    def s(self) -> np.ndarray:
        return self.a - self.b

    @property
    def w2(self) -> np.ndarray:
        return self.w2u - self.w2v

    def copy(self) -> "Hidden1Params":
        return Hidden1Params(
            self.p,
            self.m,
            self.w1u.copy(),
            self.w1v.copy(),
            self.b1.copy(),
            self.a.copy(),
            self.b.copy(),
            self.w2u.copy(),
            self.w2v.copy(),
            self.b2,
        )


TwinParams = InteractionParams | Hidden1Params


@dataclass(frozen=True)
class TwinOutput:
    """Both branch probabilities of one observation plus derived quantities."""

    mu1: float
    mu0: float
    uplift: float
    mu_t: float


def _interaction_logits(params: InteractionParams, x: np.ndarray, t) -> np.ndarray:
    p = params.p
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != p:
        raise ValueError(f"expected {p} covariates, got {x.shape[1]}")
    t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
    th = params.theta
    return params.theta0 + x @ th[:p] + t * (x @ th[p : 2 * p]) + th[2 * p] * t


def interaction_forward(params: InteractionParams, x: np.ndarray, t) -> float:
    """Probability of a positive outcome under the interaction model."""
    return float(sigmoid(_interaction_logits(params, x, t))[0])


def _hidden_pre(params: Hidden1Params, x: np.ndarray, t) -> np.ndarray:
    """Unscaled hidden pre-activations, shape (n, m)."""
    p = params.p
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != p:
        raise ValueError(f"expected {p} covariates, got {x.shape[1]}")
    t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
    w1 = params.w1
    return params.b1 + x @ w1[:p] + t[:, None] * w1[p]


def _nn_logits(params: Hidden1Params, x: np.ndarray, t) -> np.ndarray:
    pre = _hidden_pre(params, x, t)
    h = np.maximum(params.s * pre, 0.0)
    return params.b2 + h @ params.w2


def nn_forward(params: Hidden1Params, x: np.ndarray, t) -> float:
    """Probability of a positive outcome under the 1-hidden-layer network."""
    return float(sigmoid(_nn_logits(params, x, t))[0])


def _logits(params: TwinParams, x: np.ndarray, t) -> np.ndarray:
    if isinstance(params, InteractionParams):
        return _interaction_logits(params, x, t)
    return _nn_logits(params, x, t)


def forward(params: TwinParams, x: np.ndarray, t) -> float:
    """Single-observation forward pass for either architecture."""
    return float(sigmoid(_logits(params, x, t))[0])


def twin_forward_matrix(params: TwinParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both branch probabilities for every row of x: (mu1, mu0)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mu1 = sigmoid(_logits(params, x, 1.0))
    mu0 = sigmoid(_logits(params, x, 0.0))
    return mu1, mu0


def twin_forward(params: TwinParams, x: np.ndarray, t: float = 1.0) -> TwinOutput:
    """Evaluate both branches of one observation with shared weights."""
    mu1, mu0 = twin_forward_matrix(params, np.asarray(x, dtype=float)[None, :])
    mu1, mu0 = float(mu1[0]), float(mu0[0])
    t = float(t)
    return TwinOutput(mu1=mu1, mu0=mu0, uplift=mu1 - mu0, mu_t=t * mu1 + (1.0 - t) * mu0)


def predict_uplift(params: TwinParams, x: np.ndarray) -> np.ndarray:
    """Predicted uplift mu1 - mu0 for every row of x."""
    mu1, mu0 = twin_forward_matrix(params, x)
    return mu1 - mu0


def construct_nn_from_interaction(theta0: float, theta: np.ndarray, c: float) -> Hidden1Params:
    """Embed an interaction model into a width-(2p+1) ReLU network.

    The first p hidden nodes pass x_k through, the next p compute
    ReLU(-c + x_k + c*t) = t*x_k for x in [0, c]^p, and the last node passes
    t; output weights copy theta. The two models then agree exactly on
    [0, c]^p (and only there).
    """
    if not (c > 0 and np.isfinite(c)):
        raise ValueError("c must be positive and finite")
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size % 2 != 1:
        raise ValueError("theta must have odd length 2p+1")
    p = theta.size // 2
    m = 2 * p + 1
    w1 = np.zeros((p + 1, m))
    w1[:p, :p] = np.eye(p)
    w1[:p, p : 2 * p] = np.eye(p)
    w1[p, p : 2 * p] = c
    w1[p, 2 * p] = 1.0
    b1 = np.zeros(m)
    b1[p : 2 * p] = -c
    w1u, w1v = _split(w1)
    w2u, w2v = _split(theta)
    return Hidden1Params(
        p=p,
        m=m,
        w1u=w1u,
        w1v=w1v,
        b1=b1,
        a=np.ones(m),
        b=np.zeros(m),
        w2u=w2u,
        w2v=w2v,
        b2=float(theta0),
    )


def active_nodes(params: Hidden1Params) -> int:
    """Number of hidden nodes with a nonzero scaling factor."""
    if not isinstance(params, Hidden1Params):
        raise TypeError("active_nodes requires a Hidden1Params model")
    return int(np.count_nonzero(params.s))


def init_interaction(p: int) -> InteractionParams:
    """All-zero start; the interaction model's BCE is convex so no symmetry
    breaking is needed."""
    k = 2 * p + 1
    return InteractionParams(p=p, theta0=0.0, u=np.zeros(k), v=np.zeros(k))


def init_hidden1(p: int, m: int, seed: int) -> Hidden1Params:
    """Glorot-style uniform weights, zero intercepts, all scaling factors 1."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lim1 = np.sqrt(6.0 / (p + 1 + m))
    lim2 = np.sqrt(6.0 / (m + 1))
    w1 = rng.uniform(-lim1, lim1, size=(p + 1, m))
    w2 = rng.uniform(-lim2, lim2, size=m)
    w1u, w1v = _split(w1)
    w2u, w2v = _split(w2)
    return Hidden1Params(
        p=p,
        m=m,
        w1u=w1u,
        w1v=w1v,
        b1=np.zeros(m),
        a=np.ones(m),
        b=np.zeros(m),
        w2u=w2u,
        w2v=w2v,
        b2=0.0,
    )


def params_to_dict(params: TwinParams) -> dict:
    if isinstance(params, InteractionParams):
        return {
            "version": _FORMAT_VERSION,
            "arch": "interaction",
            "p": params.p,
            "theta0": params.theta0,
            "u": params.u.tolist(),
            "v": params.v.tolist(),
        }
    return {
        "version": _FORMAT_VERSION,
        "arch": "hidden1",
        "p": params.p,
        "m": params.m,
        "w1u": params.w1u.ravel().tolist(),
        "w1v": params.w1v.ravel().tolist(),
        "b1": params.b1.tolist(),
        "a": params.a.tolist(),
        "b": params.b.tolist(),
        "w2u": params.w2u.tolist(),
        "w2v": params.w2v.tolist(),
        "b2": params.b2,
    }


def params_from_dict(doc: dict) -> TwinParams:
    if doc.get("version") != _FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')!r}")
    arch = doc["arch"]
    if arch == "interaction":
        return InteractionParams(
            p=doc["p"],
            theta0=float(doc["theta0"]),
            u=np.asarray(doc["u"], dtype=float),
            v=np.asarray(doc["v"], dtype=float),
        )
    if arch == "hidden1":
        p, m = doc["p"], doc["m"]
        return Hidden1Params(
            p=p,
            m=m,
            w1u=np.asarray(doc["w1u"], dtype=float).reshape(p + 1, m),
            w1v=np.asarray(doc["w1v"], dtype=float).reshape(p + 1, m),
            b1=np.asarray(doc["b1"], dtype=float),
            a=np.asarray(doc["a"], dtype=float),
            b=np.asarray(doc["b"], dtype=float),
            w2u=np.asarray(doc["w2u"], dtype=float),
            w2v=np.asarray(doc["w2v"], dtype=float),
            b2=float(doc["b2"]),
        )
    raise ValueError(f"unknown architecture {arch!r}")


def save_params(params: TwinParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params), fh)


def load_params(path) -> TwinParams:
    with open(path, encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))
