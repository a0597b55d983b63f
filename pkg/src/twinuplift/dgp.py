"""Synthetic randomized-experiment data with known per-observation true uplift.

Covariates at odd 1-based positions are standard Gaussian draws, even
positions are Bernoulli(1/2). The binary outcome is the indicator of a
latent Gaussian with mean mu(x) + t * tau(x) and standard deviation sigma,
so the true uplift of each row is available in closed form through the
normal CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

__all__ = [
    "Scenario",
    "Dataset",
    "SCENARIOS",
    "eval_f",
    "eval_f_matrix",
    "std_normal_cdf",
    "true_uplift",
    "generate_covariates",
    "generate_dataset",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Scenario:
    """One row of the simulation design: sizes, effect functions, noise level."""

    id: int
    n: int
    p: int
    mu_fn: int
    tau_fn: int
    sigma: float

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.p < 9:
            raise ValueError(f"p must be at least 9, got {self.p}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        for fn in (self.mu_fn, self.tau_fn):
            if fn not in range(1, 9):
                raise ValueError(f"function id must be in 1..8, got {fn}")


#: The five simulation designs (mean effect, treatment effect, noise level).
SCENARIOS: dict[int, Scenario] = {
    1: Scenario(1, 10_000, 200, mu_fn=7, tau_fn=4, sigma=0.5),
    2: Scenario(2, 20_000, 100, mu_fn=3, tau_fn=5, sigma=1.0),
    3: Scenario(3, 20_000, 100, mu_fn=1, tau_fn=6, sigma=1.0),
    4: Scenario(4, 20_000, 100, mu_fn=2, tau_fn=7, sigma=2.0),
    5: Scenario(5, 20_000, 100, mu_fn=6, tau_fn=8, sigma=4.0),
}


@dataclass(frozen=True)
class Dataset:
    """Immutable covariate/treatment/outcome bundle.

    ``u_true`` is present for synthetic data only. ``propensity`` is the
    (constant) treatment assignment probability; everything here assumes a
    randomized trial with propensity 1/2.
    """

    x: np.ndarray
    t: np.ndarray
    y: np.ndarray
    u_true: np.ndarray | None = None
    propensity: float = field(default=0.5)

    def __post_init__(self):
        n = self.x.shape[0]
        if self.t.shape != (n,) or self.y.shape != (n,):
            raise ValueError("t and y must be length-n vectors")
        for name, vec in (("t", self.t), ("y", self.y)):
            bad = np.where((vec != 0) & (vec != 1))[0]
            if bad.size:
                raise ValueError(f"{name} must be binary; first offender at row {bad[0]}")
        if self.u_true is not None:
            if self.u_true.shape != (n,):
                raise ValueError("u_true must be a length-n vector")
            if np.any(np.abs(self.u_true) >= 1.0):
                raise ValueError("u_true values must lie in (-1, 1)")
        for arr in (self.x, self.t, self.y, self.u_true):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        u = None if self.u_true is None else self.u_true[idx].copy()
        return Dataset(self.x[idx].copy(), self.t[idx].copy(), self.y[idx].copy(), u)


def eval_f_matrix(fn_id: int, x: np.ndarray) -> np.ndarray:
    """Evaluate effect function ``fn_id`` on every row of an (n, p) matrix.

    Covariate indices below are 1-based: x1 is column 0.
    """
    if fn_id not in range(1, 9):
        raise ValueError(f"function id must be in 1..8, got {fn_id}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p = x.shape[1]
    if fn_id >= 4 and p < 9:
        raise ValueError(f"f{fn_id} reads covariates up to x9 but p={p}")
    if fn_id == 1:
        return np.zeros(x.shape[0])
    if fn_id == 2:
        return 5.0 * (x[:, 0] > 1) - 5.0
    if fn_id == 3:
        return 2.0 * x[:, 0] - 4.0
    if fn_id == 4:
        x2, x4, x6 = x[:, 1], x[:, 3], x[:, 5]
        return (
            x2 * x4 * x6
            + 2 * x2 * x4 * (1 - x6)
            + 3 * x2 * (1 - x4) * x6
            + 4 * x2 * (1 - x4) * (1 - x6)
            + 5 * (1 - x2) * x4 * x6
            + 6 * (1 - x2) * x4 * (1 - x6)
            + 7 * (1 - x2) * (1 - x4) * x6
            + 8 * (1 - x2) * (1 - x4) * (1 - x6)
        )
    if fn_id == 5:
        return x[:, 0] + x[:, 2] + x[:, 4] + x[:, 6] + x[:, 7] + x[:, 8] - 2.0
    if fn_id == 6:
        return (
            4.0 * (x[:, 0] > 1) * (x[:, 2] > 0)
            + 4.0 * (x[:, 4] > 1) * (x[:, 6] > 0)
            + 2.0 * x[:, 7] * x[:, 8]
        )
    if fn_id == 7:
        sq = x[:, 0] ** 2 + x[:, 2] ** 2 + x[:, 4] ** 2 + x[:, 6] ** 2 + x[:, 8] ** 2
        lin = x[:, 1] + x[:, 3] + x[:, 5] + x[:, 7]
        return 0.5 * (sq + lin - 11.0)
    # f8 = (f4 + f5) / sqrt(2)
    return (eval_f_matrix(4, x) + eval_f_matrix(5, x)) / _SQRT2


def eval_f(fn_id: int, x: np.ndarray) -> float:
    """Scalar version of :func:`eval_f_matrix` for a single covariate vector."""
    return float(eval_f_matrix(fn_id, np.asarray(x, dtype=float)[None, :])[0])


def std_normal_cdf(z):
    """Standard Gaussian CDF via the complementary error function."""
    return 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)


def true_uplift(mu, tau, sigma):
    """True uplift Phi((mu + tau) / sigma) - Phi(mu / sigma) of a probit outcome."""
    if np.any(np.asarray(sigma) <= 0):
        raise ValueError("sigma must be positive")
    mu = np.asarray(mu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    return std_normal_cdf((mu + tau) / sigma) - std_normal_cdf(mu / sigma)


def _column_streams(seed: int, p: int) -> list[np.random.Generator]:
    # One child stream per covariate column, then one for t, one for the
    # latent noise; keeps datasets reproducible and columns independent of p
    # ordering details.
    children = np.random.SeedSequence(seed).spawn(p + 2)
    return [np.random.default_rng(c) for c in children]


def generate_covariates(n: int, p: int, seed: int) -> np.ndarray:
    """Draw an (n, p) covariate matrix: odd 1-based columns Gaussian(0,1),
    even columns Bernoulli(1/2)."""
    if n <= 0 or p <= 0:
        raise ValueError("n and p must be positive")
    streams = _column_streams(seed, p)
    x = np.empty((n, p))
    for j in range(p):
        if (j + 1) % 2 == 1:
            x[:, j] = streams[j].standard_normal(n)
        else:
            x[:, j] = streams[j].integers(0, 2, size=n).astype(float)
    return x


def generate_dataset(scenario: Scenario, seed: int) -> Dataset:
    """Generate one randomized-trial dataset for a scenario.

    The latent outcome is N(mu(x) + t * tau(x), sigma^2) and y indicates a
    positive latent draw; u_true stores the closed-form uplift of every row.
    """
    n, p = scenario.n, scenario.p
    x = generate_covariates(n, p, seed)
    streams = _column_streams(seed, p)
    t = streams[p].integers(0, 2, size=n).astype(float)
    noise = streams[p + 1].standard_normal(n)
    mu = eval_f_matrix(scenario.mu_fn, x)
    tau = eval_f_matrix(scenario.tau_fn, x)
    latent = mu + t * tau + scenario.sigma * noise
    y = (latent > 0).astype(float)
    u = true_uplift(mu, tau, scenario.sigma)
    return Dataset(x, t, y, u_true=u)
