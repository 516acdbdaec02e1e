"""Figures written next to CLI reports. Uses the non-interactive Agg backend."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "savefig.bbox": "tight",
    # fixed metadata keeps repeated runs byte-identical
    "svg.hashsalt": "hypergrid",
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if path.suffix == ".svg" else {"Software": None}
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def profile_figure(profile: Sequence[int], t: int, n: int, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.bar(range(len(profile)), [float(v) for v in profile], color="0.35", width=0.8)
        ax.set_xlabel("level i")
        ax.set_ylabel("N(i)")
        ax.set_title(f"rank sequence of [{t}]^{n}")
        return _save(fig, path)


def flow_figure(t: int, weights: dict, path: Path) -> Path:
    """Edge weights of a two-dimensional grid drawn on the lattice."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.3 * t + 1, 1.3 * t + 1))
        ax.grid(False)
        ax.set_aspect("equal")
        for (x, c), w in sorted(weights.items()):
            y = (x[0] + (c == 1), x[1] + (c == 2))
            ax.plot([x[0], y[0]], [x[1], y[1]], color="0.6", lw=1, zorder=1)
            mx, my = (x[0] + y[0]) / 2, (x[1] + y[1]) / 2
            ax.text(mx, my, str(w), fontsize=7, ha="center", va="center",
                    bbox=dict(boxstyle="round,pad=0.1", fc="white", ec="none"))
        xs = [(a, b) for a in range(t) for b in range(t)]
        ax.scatter([p[0] for p in xs], [p[1] for p in xs], s=12, color="k", zorder=2)
        ax.set_xticks(range(t))
        ax.set_yticks(range(t))
        ax.set_title(f"flow weights on [{t}]^2")
        return _save(fig, path)


def line_figure(xs, series: dict[str, Sequence[float]], xlabel: str, ylabel: str,
                title: str, path: Path, logx: bool = False, logy: bool = False) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, ys in sorted(series.items()):
            ax.plot(xs, ys, marker="o", ms=3, lw=1, label=label)
        if logx:
            ax.set_xscale("log", base=2)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        return _save(fig, path)


def density_figure(xs, values, lattice_x, lattice_v, title: str, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(xs, values, lw=1, color="0.2", label="f(x)")
        ax.scatter(lattice_x, lattice_v, s=10, color="C3", zorder=3, label="exact point masses")
        ax.set_xlabel("x")
        ax.set_ylabel("density")
        ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, path)


def residual_figure(steps, sizes, increments, thresholds: dict[str, float], path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.step(steps, sizes, where="post", color="0.3", lw=1)
        inc = [(s, a) for s, a, i in zip(steps, sizes, increments) if i]
        if inc:
            ax.scatter(*zip(*inc), s=12, color="C3", zorder=3, label="increment")
        for name, v in sorted(thresholds.items()):
            ax.axhline(v, ls="--", lw=0.8, color="0.6")
            ax.text(steps[-1] if steps else 0, v, f" {name}", fontsize=7, va="bottom", ha="right")
        ax.set_xlabel("step")
        ax.set_ylabel("|A_i|")
        ax.set_title("residual set size")
        if inc:
            ax.legend(frameon=False)
        return _save(fig, path)
