"""Data file ingestion and writing.

Formats:
  - Potts lattice: whitespace-separated integer grid, one lattice row per line.
  - Graph: edge list, one "i j" pair per line, 0-based node indices.
  - Item responses: headerless CSV of 0/1, n rows and p columns.
"""

from __future__ import annotations

import numpy as np


def read_lattice(path) -> np.ndarray:
    cells = np.loadtxt(path, dtype=np.int64, ndmin=2)
    if cells.min() < 1:
        raise ValueError(f"{path}: lattice colors must be positive integers")
    return cells


def write_lattice(path, cells: np.ndarray) -> None:
    np.savetxt(path, np.asarray(cells, dtype=np.int64), fmt="%d")


def read_edge_list(path, n: int | None = None) -> np.ndarray:
    """Read an edge list into an adjacency matrix.

    `n` fixes the node count (needed when the highest-indexed nodes are
    isolated); defaults to max index + 1.
    """
    raw = np.loadtxt(path, dtype=np.int64, ndmin=2)
    if raw.size == 0:
        edges = np.empty((0, 2), dtype=np.int64)
    else:
        if raw.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns, got {raw.shape[1]}")
        edges = raw
    if n is None:
        n = int(edges.max()) + 1 if edges.size else 0
    adj = np.zeros((n, n), dtype=np.int64)
    for i, j in edges:
        if i == j or i < 0 or j < 0 or i >= n or j >= n:
            raise ValueError(f"{path}: invalid edge ({i}, {j}) for n={n}")
        adj[i, j] = 1
        adj[j, i] = 1
    return adj


def write_edge_list(path, adj: np.ndarray) -> None:
    iu, ju = np.triu_indices(adj.shape[0], 1)
    mask = adj[iu, ju] == 1
    np.savetxt(path, np.stack([iu[mask], ju[mask]], axis=1), fmt="%d")


def read_item_responses(path) -> np.ndarray:
    x = np.loadtxt(path, dtype=np.int64, delimiter=",", ndmin=2)
    if not np.isin(x, (0, 1)).all():
        raise ValueError(f"{path}: entries must be 0/1")
    return x


def write_item_responses(path, x: np.ndarray) -> None:
    np.savetxt(path, np.asarray(x, dtype=np.int64), fmt="%d", delimiter=",")
