"""Matplotlib figures written next to the CSV/JSON artifacts."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["lines_figure", "cloud_figure", "scaling_figure"]

# no timestamps or version strings, so repeated runs give identical files
_PNG_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def lines_figure(path, panels) -> Path:
    """Grid of panels, each ``(label, thetas, upper, lower)``."""
    panels = list(panels)
    cols = min(3, max(1, len(panels)))
    rows = (len(panels) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows), squeeze=False)
    for ax in axes.flat[len(panels):]:
        ax.set_visible(False)
    for ax, (label, th, up, lo) in zip(axes.flat, panels):
        ax.plot(th, up, color="red", lw=0.6)
        ax.plot(th, lo, color="blue", lw=0.6)
        ax.set_title(label, fontsize=9)
        ax.set_xlim(0, 1)
    fig.tight_layout()
    return _save(fig, path)


def cloud_figure(path, thetas, xs, label: str = "", max_points: int = 200_000) -> Path:
    thetas = np.asarray(thetas)
    xs = np.asarray(xs)
    if thetas.size > max_points:
        idx = np.linspace(0, thetas.size - 1, max_points).astype(np.int64)
        thetas, xs = thetas[idx], xs[idx]
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.scatter(thetas, xs, s=0.05, c="red", marker=".", linewidths=0)
    ax.set_xlim(0, 1)
    ax.set_xlabel("theta")
    ax.set_ylabel("x")
    ax.set_title(label, fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def scaling_figure(path, fits) -> Path:
    """Log-log plot of one or more scaling fits ``(label, ScalingFit)``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, fit in fits:
        ok = np.isfinite(fit.values) & (fit.values > 0 if fit.kind == "box" else True)
        xv = np.log2(fit.scales[ok])
        yv = np.log2(fit.values[ok]) if fit.kind == "box" else fit.values[ok] / np.log(2)
        ax.plot(xv, yv, "o-", ms=3, lw=0.8, label=f"{label}: slope {fit.slope:.3f}")
    ax.set_xlabel("log2 eps")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
