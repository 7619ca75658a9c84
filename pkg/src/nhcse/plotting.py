"""SVG figures for scenario results (Agg backend, reproducible output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt and no date stamp keep reruns byte-identical
plt.rcParams["svg.hashsalt"] = "nhcse"
_META = {"Date": None}

CLASS_STYLE = {"bulk": ("tab:blue", 6), "lower": ("tab:red", 14), "upper": ("tab:orange", 14),
               "left": ("tab:green", 14), "right": ("tab:purple", 14), "free": ("k", 18)}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_spectrum(rows, path) -> None:
    """Complex spectrum coloured by state class."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    classes = sorted({r[2] for r in rows}, key=lambda c: (c != "bulk", c))
    for c in classes:
        pts = np.array([(r[0], r[1]) for r in rows if r[2] == c])
        color, size = CLASS_STYLE.get(c, ("tab:gray", 10))
        ax.scatter(pts[:, 0], pts[:, 1], s=size, color=color, label=c, linewidths=0)
    ax.set_xlabel("Re E / t1")
    ax.set_ylabel("Im E / t1")
    ax.legend(fontsize=7, markerscale=1.5)
    _save(fig, path)


def plot_density(rows, path) -> None:
    """Site density map."""
    a = np.array(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    sc = ax.scatter(a[:, 0], a[:, 1], c=a[:, 2], s=8, cmap="viridis", linewidths=0)
    fig.colorbar(sc, ax=ax, label="rho")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    _save(fig, path)


def plot_profile(rows, path) -> None:
    a = np.array(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(a[:, 0], a[:, 1], ".", ms=3)
    ax.set_xlabel("x")
    ax.set_ylabel("gamma / t1")
    _save(fig, path)


def plot_curve(curve, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for label, y in curve.series.items():
        y = np.asarray(y, dtype=float)
        x = np.asarray(curve.x[:len(y)], dtype=float)
        ax.plot(x, y, "o-" if curve.markers else "-", ms=3, label=label)
    if curve.logy:
        ax.set_yscale("log")
    ax.set_xlabel(curve.xlabel)
    ax.set_ylabel(curve.ylabel)
    ax.legend(fontsize=7)
    _save(fig, path)


def render(result, out_dir) -> list[str]:
    """Write every plot a :class:`ScenarioResult` supports; returns file names."""
    out = Path(out_dir)
    written = []
    makers = {"spectrum": plot_spectrum, "density": plot_density, "profile": plot_profile}
    for name, fn in makers.items():
        if name in result.tables and result.tables[name][1]:
            fn(result.tables[name][1], out / f"{name}.svg")
            written.append(f"{name}.svg")
    for name, curve in sorted(result.curves.items()):
        plot_curve(curve, out / f"{name}.svg")
        written.append(f"{name}.svg")
    return written
