"""Qini curve, Qini coefficient, Kendall uplift rank correlation and the
adjusted Qini coefficient.

Only the ranks of the predictions matter anywhere in this module. Ties are
broken by ascending original index so every quantity is deterministic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QiniReport",
    "default_grid",
    "qini_curve",
    "qini_coefficient",
    "kendall_bin_stats",
    "kendall_uplift_corr",
    "adjusted_qini",
    "evaluate_predictions",
    "report_to_csv",
]


@dataclass
class QiniReport:
    """Evaluation of one (predictions, dataset) pair."""

    grid: np.ndarray
    g_values: np.ndarray
    q_hat: float
    rho_hat: float
    q_adj: float
    bins: int
    bin_pred_uplift: np.ndarray = field(default=None)
    bin_obs_uplift: np.ndarray = field(default=None)
    warnings: int = 0

    @property
    def q_curve(self) -> np.ndarray:
        """Q(phi) = g(phi) - phi * g(1), the gain over random targeting."""
        return self.g_values - self.grid * self.g_values[-1]


def default_grid(j: int = 20) -> np.ndarray:
    """j equal bins on [0, 1], i.e. j+1 grid points."""
    if j < 1:
        raise ValueError("grid needs at least one bin")
    return np.linspace(0.0, 1.0, j + 1)


def _sorted_order(predictions: np.ndarray) -> np.ndarray:
    """Indices by descending prediction, ties by ascending original index."""
    return np.lexsort((np.arange(predictions.size), -predictions))


def qini_curve(predictions, t, y, grid=None) -> np.ndarray:
    """Incremental-response curve g over the given proportion grid.

    For each proportion phi, the top ceil(phi * n) observations by predicted
    uplift form the targeted set; g is their treated positive count minus
    the control positive count reweighted by the in-set treated/control
    ratio, normalized by the total treated count. When the targeted set has
    no controls the reweighted control term is taken as 0.
    """
    predictions = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(t, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = predictions.size
    if n == 0:
        raise ValueError("empty input")
    if grid is None:
        grid = default_grid()
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > 1:
        raise ValueError("grid must be sorted within [0, 1]")
    n_treated = t.sum()
    if n_treated < 1:
        raise ValueError("no treated observations")

    order = _sorted_order(predictions)
    yt = np.concatenate([[0.0], np.cumsum(y[order] * t[order])])
    yc = np.concatenate([[0.0], np.cumsum(y[order] * (1.0 - t[order]))])
    st = np.concatenate([[0.0], np.cumsum(t[order])])
    sc = np.concatenate([[0.0], np.cumsum(1.0 - t[order])])

    g = np.zeros(grid.size)
    for i, phi in enumerate(grid):
        k = math.ceil(phi * n)
        if k == 0:
            continue
        control_term = yc[k] * (st[k] / sc[k]) if sc[k] > 0 else 0.0
        g[i] = (yt[k] - control_term) / n_treated
    return g


def qini_coefficient(grid, g_values) -> float:
    """Trapezoid area between g and the random-targeting diagonal, x100."""
    grid = np.asarray(grid, dtype=float)
    g = np.asarray(g_values, dtype=float)
    if grid.size < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("grid must have at least 2 points and span [0, 1]")
    q = g - grid * g[-1]
    return float(0.5 * np.sum(np.diff(grid) * (q[1:] + q[:-1])) * 100.0)


def kendall_bin_stats(predictions, t, y, bins: int = 10):
    """Per-bin mean predicted uplift and observed uplift.

    Bins are the K contiguous quantile segments of the descending-prediction
    order. A bin without treated or without control observations has an
    undefined observed uplift (NaN) and increments the warning counter.
    Returns (pred_means, obs_uplifts, warnings).
    """
    predictions = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(t, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if bins < 2:
        raise ValueError("need at least 2 bins")
    order = _sorted_order(predictions)
    segments = np.array_split(order, bins)
    pred_means = np.empty(bins)
    obs = np.empty(bins)
    warnings = 0
    for k, seg in enumerate(segments):
        pred_means[k] = predictions[seg].mean() if seg.size else np.nan
        nt = t[seg].sum()
        nc = seg.size - nt
        if nt == 0 or nc == 0:
            obs[k] = np.nan
            warnings += 1
            continue
        rate_t = (y[seg] * t[seg]).sum() / nt
        rate_c = (y[seg] * (1.0 - t[seg])).sum() / nc
        obs[k] = rate_t - rate_c
    return pred_means, obs, warnings


def kendall_from_bin_means(pred_means, obs_uplifts) -> float:
    """Pairwise sign agreement between two bin-mean vectors; NaN entries
    contribute 0 to every pair that touches them."""
    pred_means = np.asarray(pred_means, dtype=float)
    obs = np.asarray(obs_uplifts, dtype=float)
    k = pred_means.size
    if k < 2:
        raise ValueError("need at least 2 bins")
    total = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            if np.isnan(obs[i]) or np.isnan(obs[j]):
                continue
            total += np.sign(pred_means[i] - pred_means[j]) * np.sign(obs[i] - obs[j])
    return float(2.0 * total / (k * (k - 1)))


def kendall_uplift_corr(predictions, t, y, bins: int = 10) -> float:
    pred_means, obs, _ = kendall_bin_stats(predictions, t, y, bins)
    return kendall_from_bin_means(pred_means, obs)


def adjusted_qini(q_hat: float, rho_hat: float) -> float:
    """rho * max(0, q)."""
    return rho_hat * max(0.0, q_hat)


def evaluate_predictions(predictions, t, y, grid_bins: int = 20, kendall_bins: int = 10) -> QiniReport:
    """Full evaluation of one prediction vector against observed (t, y)."""
    grid = default_grid(grid_bins)
    g = qini_curve(predictions, t, y, grid)
    q_hat = qini_coefficient(grid, g)
    pred_means, obs, warnings = kendall_bin_stats(predictions, t, y, kendall_bins)
    rho = kendall_from_bin_means(pred_means, obs)
    return QiniReport(
        grid=grid,
        g_values=g,
        q_hat=q_hat,
        rho_hat=rho,
        q_adj=adjusted_qini(q_hat, rho),
        bins=kendall_bins,
        bin_pred_uplift=pred_means,
        bin_obs_uplift=obs,
        warnings=warnings,
    )


def report_to_csv(report: QiniReport, curve_path, scalars_path) -> None:
    """Write the curve points and the scalar summary as two CSV files."""
    q = report.q_curve
    with open(curve_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phi", "g", "Q"])
        for i in range(report.grid.size):
            writer.writerow(
                [f"{report.grid[i]:.17g}", f"{report.g_values[i]:.17g}", f"{q[i]:.17g}"]
            )
    with open(scalars_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q_hat", "rho_hat", "q_adj", "K", "J", "warnings"])
        writer.writerow(
            [
                f"{report.q_hat:.17g}",
                f"{report.rho_hat:.17g}",
                f"{report.q_adj:.17g}",
                report.bins,
                report.grid.size - 1,
                report.warnings,
            ]
        )
