"""Figure rendering for the CLI report path (opt-in via --plot).

All functions write PNG files next to the delimited output and never open a
display; the Agg backend is forced before pyplot is touched.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_histogram(path, values, probs, title: str, xlabel: str = "cost value") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(values, probs, color="#3b6ea5", width=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("probability")
    ax.set_title(title)
    _finish(fig, path)


def save_series(path, rs, values, title: str) -> None:
    values = np.asarray(values)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(rs, values.real, "o-", label="Re", color="#3b6ea5")
    ax.plot(rs, values.imag, "s--", label="Im", color="#b5442d")
    ax.set_xlabel("r")
    ax.set_ylabel("matrix element")
    ax.set_title(title)
    ax.legend()
    _finish(fig, path)


def save_distribution_comparison(path, empirical, exact, title: str) -> None:
    x = np.arange(len(empirical))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    width = 0.4
    ax.bar(x - width / 2, empirical, width=width, label="sampled", color="#3b6ea5")
    ax.bar(x + width / 2, exact, width=width, label="exact", color="#b5442d")
    ax.set_xlabel("basis state")
    ax.set_ylabel("probability")
    ax.set_title(title)
    ax.legend()
    _finish(fig, path)


def save_trajectory(path, xs, ys, title: str, xlabel: str, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(xs, ys, "-", color="#3b6ea5")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    _finish(fig, path)


def save_landscape(path, gammas, betas, values, title: str) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(values, origin="lower", aspect="auto",
                   extent=[betas[0], betas[-1], gammas[0], gammas[-1]],
                   cmap="viridis")
    ax.set_xlabel("beta")
    ax.set_ylabel("gamma")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="objective")
    _finish(fig, path)
