"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0
# fixed metadata keeps PNG/PDF output byte-stable across runs
_SAVE_META = {"png": {"Software": None}, "pdf": {"CreationDate": None, "Producer": None}}


def new_figure(width=6.4, height=None):
    if height is None:
        height = width * GOLDEN
    fig, ax = plt.subplots(figsize=(width, height), constrained_layout=True)
    ax.tick_params(labelsize=9)
    return fig, ax


def save(fig, path):
    path = str(path)
    ext = path.rsplit(".", 1)[-1].lower()
    fig.savefig(path, dpi=150, metadata=_SAVE_META.get(ext))
    plt.close(fig)
    return path


def plot_pivot_sweep(rows, kind, k_n, path, title=None):
    """Pivot mass of each label against ``x``.

    ``rows`` are ``(x, label_str, multiplicity, mass)``.  Multisets are drawn
    against ``1 - x`` on a reversed log axis since the interesting range
    crowds toward ``x = 1``.
    """
    series = defaultdict(list)
    for x, label, _, mass in rows:
        series[label].append((x, mass))
    fig, ax = new_figure()
    floor = 1e-18
    for label, pts in series.items():
        pts.sort()
        xs = np.array([p[0] for p in pts])
        ys = np.maximum([p[1] for p in pts], floor)
        if kind == "multiset":
            xs = 1.0 - xs
        ax.plot(xs, ys, marker="o", ms=3, lw=1.2, label=label)
    ax.axhline(1.0 / k_n, color="k", ls="--", lw=0.8, label=r"$1/k_n$")
    ax.set_yscale("log")
    if kind == "multiset":
        ax.set_xscale("log")
        ax.invert_xaxis()
        ax.set_xlabel(r"$1 - x$")
    else:
        if len({r[0] for r in rows}) > 1 and min(r[0] for r in rows) > 0:
            ax.set_xscale("log")
        ax.set_xlabel(r"$x$")
    ax.set_ylabel("pivot mass")
    if title:
        ax.set_title(title, fontsize=10)
    if len(series) <= 12:
        ax.legend(fontsize=7, ncol=2, frameon=False)
    return save(fig, path)


def plot_coupling(table, path, title=None):
    """Heat map of coupled mass by column label and total row count ``sum z_i``
    (row classes collapsed on their capped total)."""
    totals = np.asarray(table.rows).sum(axis=1)
    width = int(totals.max()) + 1 if len(totals) else 1
    grid = np.zeros((len(table.labels), width))
    np.add.at(grid, (np.asarray(table.cols), totals), np.asarray(table.mass))
    fig, ax = new_figure(width=6.4, height=max(2.4, 0.28 * len(table.labels) + 1.2))
    shown = np.where(grid > 0, grid, np.nan)
    im = ax.imshow(np.log10(shown), aspect="auto", cmap="viridis", interpolation="nearest")
    ax.set_yticks(range(len(table.labels)))
    ax.set_yticklabels([str(lab) for lab in table.labels], fontsize=7)
    ax.set_xlabel(r"capped row total $\sum_i v_i$")
    ax.set_ylabel("column label")
    cbar = fig.colorbar(im, ax=ax)
    cbar.set_label(r"$\log_{10}$ mass", fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return save(fig, path)
