"""Report figures written straight to files.

Uses the object-oriented Agg canvas rather than pyplot so figure creation
carries no global state.
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .metrics import step_norms

_PNG_META = {"Software": None}


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, metadata=_PNG_META)


def plot_yt_slice(image, path, title="y-t slice") -> None:
    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    ax.imshow(image, cmap="gray", aspect="auto", interpolation="nearest", vmin=0, vmax=255)
    ax.set_xlabel("frame t")
    ax.set_ylabel("row y")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_step_profile(loops: dict, path) -> None:
    """Circular frame-step norms per loop; the last point is the wrap step."""
    fig = Figure(figsize=(7, 3.5))
    ax = fig.add_subplot()
    for name, frames in loops.items():
        g = step_norms(frames)
        med = np.median(g[:-1]) if g.size > 1 else 1.0
        ax.plot(np.arange(g.size), g / (med or 1.0), marker=".", label=name)
        ax.plot([g.size - 1], [g[-1] / (med or 1.0)], "o", mfc="none", ms=10, color="k")
    ax.axhline(1.2, ls="--", lw=0.8, color="grey")
    ax.set_xlabel("step i -> i+1 (last = wrap)")
    ax.set_ylabel("step norm / interior median")
    ax.legend(frameon=False, fontsize="small")
    fig.tight_layout()
    _save(fig, path)


def plot_scores(rows, path) -> None:
    """Grouped bars of OTS, 180° and eye-contact means per method."""
    keys = ("ots", "rule180", "eye")
    labels = ("OTS", "180°", "Eye")
    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    width = 0.8 / max(len(rows), 1)
    x = np.arange(len(keys))
    for i, (name, scores) in enumerate(rows):
        ax.bar(x + i * width, [scores[k] for k in keys], width, label=name)
    ax.set_xticks(x + width * (len(rows) - 1) / 2)
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 1.05)
    ax.legend(frameon=False, fontsize="small")
    fig.tight_layout()
    _save(fig, path)
