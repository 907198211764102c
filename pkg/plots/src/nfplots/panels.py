"""The three figure types, as pure file-to-file transforms.

Inputs are the CSV formats written by the nfbayes harness:

- diagnostic summary (``summary.csv``): columns tuning, mean_acd, acd_lo,
  acd_hi, pass — one row per tuning-grid entry;
- density grid (``density_grid.csv``): columns theta_1, theta_2, density —
  one row per cell of a rectangular grid;
- posterior summary (``posterior_summary.csv``): columns column, mean, ... —
  one row per trace column, with pairwise-interaction coordinates stored
  after the first ``items`` main-effect coordinates in upper-triangular
  order.

Every function returns the matplotlib Figure and, when ``out`` is given,
also writes it to disk.  Identical inputs produce identical figures (the
network layout uses a fixed seed).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np

LAYOUT_SEED = 7
PASS_COLOR = "tab:blue"
FAIL_COLOR = "tab:red"


class PlotInputError(ValueError):
    """Input file does not match the documented format."""


def _read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _require_columns(rows: list[dict], needed: tuple, path) -> None:
    have = set(rows[0]) if rows else set()
    missing = [c for c in needed if c not in have]
    if missing:
        raise PlotInputError(f"{path}: missing columns {missing} (have {sorted(have)})")


def _truthy(value: str) -> bool:
    return str(value).strip().lower() in ("true", "1", "yes")


def _save(fig, out):
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=150)
    return fig


def plot_acd_panel(summary_csv, out=None, threshold: float | None = None):
    """Mean diagnostic value per tuning entry: markers colored by pass/fail,
    vertical 95% interval bars, and a dashed horizontal threshold line."""
    rows = [r for r in _read_csv(summary_csv) if r.get("status", "ok") == "ok"]
    if not rows:
        raise PlotInputError(f"{summary_csv}: no usable rows")
    _require_columns(rows, ("tuning", "mean_acd", "acd_lo", "acd_hi", "pass"), summary_csv)
    xs = np.arange(len(rows))
    means = np.array([float(r["mean_acd"]) for r in rows])
    los = np.array([float(r["acd_lo"]) for r in rows])
    his = np.array([float(r["acd_hi"]) for r in rows])
    passed = np.array([_truthy(r["pass"]) for r in rows])

    fig, ax = plt.subplots(figsize=(6, 4))
    for x, lo, hi in zip(xs, los, his):
        ax.plot([x, x], [lo, hi], color="gray", linewidth=1.2, zorder=1)
    for ok, color, label in ((True, PASS_COLOR, "pass"), (False, FAIL_COLOR, "fail")):
        sel = passed == ok
        if sel.any():
            ax.scatter(xs[sel], means[sel], color=color, label=label, zorder=2)
    if threshold is not None:
        ax.axhline(threshold, linestyle="--", color="black", linewidth=1.0)
    ax.set_xticks(xs)
    ax.set_xticklabels([r["tuning"] for r in rows])
    ax.set_xlabel("tuning value")
    ax.set_ylabel("mean diagnostic")
    ax.set_yscale("log" if means.max() / max(means.min(), 1e-12) > 50 else "linear")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out)


def plot_density(grid_csv, out=None):
    """Filled contour plot of a two-parameter density on a rectangular grid."""
    rows = _read_csv(grid_csv)
    if not rows:
        raise PlotInputError(f"{grid_csv}: no usable rows")
    _require_columns(rows, ("theta_1", "theta_2", "density"), grid_csv)
    x = np.array([float(r["theta_1"]) for r in rows])
    y = np.array([float(r["theta_2"]) for r in rows])
    z = np.array([float(r["density"]) for r in rows])
    xs = np.unique(x)
    ys = np.unique(y)
    if len(xs) * len(ys) != len(rows):
        raise PlotInputError(
            f"{grid_csv}: expected a rectangular grid, got {len(rows)} rows "
            f"for {len(xs)} x {len(ys)} distinct axis values"
        )
    order = np.lexsort((y, x))
    grid = z[order].reshape(len(xs), len(ys))

    fig, ax = plt.subplots(figsize=(5, 4))
    cs = ax.contourf(xs, ys, grid.T, levels=12, cmap="viridis")
    fig.colorbar(cs, ax=ax, label="density")
    ax.set_xlabel(r"$\theta_1$")
    ax.set_ylabel(r"$\theta_2$")
    fig.tight_layout()
    return _save(fig, out)


def interaction_means(summary_csv, items: int) -> list[tuple[int, int, float]]:
    """(item_j, item_k, mean) per pairwise-interaction coordinate, decoded
    from a posterior summary written for an item-network trace."""
    rows = _read_csv(summary_csv)
    if not rows:
        raise PlotInputError(f"{summary_csv}: no usable rows")
    _require_columns(rows, ("column", "mean"), summary_csv)
    means = {r["column"]: float(r["mean"]) for r in rows}
    ju, ku = np.triu_indices(items, 1)
    edges = []
    for idx, (j, k) in enumerate(zip(ju, ku)):
        name = f"theta_{items + idx + 1}"
        if name not in means:
            raise PlotInputError(
                f"{summary_csv}: missing column '{name}' for the ({j + 1},{k + 1}) "
                f"interaction of {items} items"
            )
        edges.append((int(j) + 1, int(k) + 1, means[name]))
    return edges


def plot_network(summary_csv, items: int, out=None, width_scale: float = 4.0):
    """Item graph with edge widths proportional to posterior interaction means.

    Zero-mean interactions are dropped; negative means are rejected since a
    line width cannot be negative (pass magnitudes or shrunken estimates).
    """
    edges = [(j, k, m) for j, k, m in interaction_means(summary_csv, items) if m != 0.0]
    negative = [(j, k, m) for j, k, m in edges if m < 0]
    if negative:
        raise PlotInputError(
            f"{summary_csv}: negative edge widths for item pairs "
            f"{[(j, k) for j, k, _ in negative]}; widths must be nonnegative"
        )
    graph = nx.Graph()
    graph.add_nodes_from(range(1, items + 1))
    graph.add_weighted_edges_from(edges)
    pos = nx.spring_layout(graph, seed=LAYOUT_SEED)

    fig, ax = plt.subplots(figsize=(5, 5))
    widths = [width_scale * m for _, _, m in edges]
    nx.draw_networkx_nodes(graph, pos, ax=ax, node_color="lightsteelblue")
    nx.draw_networkx_labels(graph, pos, ax=ax)
    if edges:
        nx.draw_networkx_edges(
            graph, pos, ax=ax, edgelist=[(j, k) for j, k, _ in edges], width=widths
        )
    ax.set_axis_off()
    fig.tight_layout()
    return _save(fig, out)
