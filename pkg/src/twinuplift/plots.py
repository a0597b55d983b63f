"""Figure rendering for evaluation reports and benchmark summaries.

Figures are written next to the CSV artifacts; nothing here feeds back into
any computation.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["save_qini_figure", "save_trace_figure", "save_benchmark_figure"]


def save_qini_figure(report, path, title: str | None = None) -> None:
    """Qini curve g with the random-targeting diagonal."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(report.grid, report.g_values, marker="o", ms=3, lw=1.5, label="model")
    ax.plot(
        [0, 1], [0, report.g_values[-1]], ls="--", color="gray", lw=1, label="random targeting"
    )
    ax.set_xlabel(r"fraction targeted $\varphi$")
    ax.set_ylabel(r"$g(\varphi)$")
    label = f"q = {report.q_hat:.2f}, rho = {report.rho_hat:.2f}, q_adj = {report.q_adj:.2f}"
    ax.set_title(f"{title}\n{label}" if title else label, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trace_figure(trace, path) -> None:
    """Loss components per epoch, plus active node count when available."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    epochs = range(len(trace.loss))
    ax.plot(epochs, trace.loss, label="total", lw=1.5)
    ax.plot(epochs, trace.l1, label="outcome term", lw=1)
    ax.plot(epochs, trace.l2, label="treatment term", lw=1)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    if any(m is not None for m in trace.active_nodes):
        ax2 = ax.twinx()
        ax2.plot(epochs, trace.active_nodes, color="crimson", ls=":", lw=1, label="active nodes")
        ax2.set_ylabel("active nodes", color="crimson")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_benchmark_figure(rows, path) -> None:
    """Mean adjusted Qini per method with standard-error bars."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    labels = [row.label for row in rows]
    means = [row.mean for row in rows]
    errs = [row.se for row in rows]
    ax.bar(labels, means, yerr=errs, capsize=4, color="steelblue")
    ax.set_ylabel("adjusted Qini (test, mean over runs)")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
