"""Potts model on an r x s lattice with K colors, 4-neighborhood, free boundary.

S(x) is the scalar count of adjacent same-color pairs, so f(x|theta) puts more
mass on smooth colorings as theta grows.
"""

from __future__ import annotations

import numpy as np

from .base import Model, all_digit_arrays, ENUM_CAP_DEFAULT


class PottsModel(Model):
    dim = 1

    def __init__(self, rows: int, cols: int, colors: int):
        if rows < 1 or cols < 1:
            raise ValueError("lattice dimensions must be positive")
        if colors < 2:
            raise ValueError("need at least 2 colors")
        self.rows = rows
        self.cols = cols
        self.colors = colors
        self._enum_cache = None

    # -- states -------------------------------------------------------------

    def validate_state(self, cells: np.ndarray) -> np.ndarray:
        cells = np.asarray(cells)
        if cells.shape != (self.rows, self.cols):
            raise ValueError(f"lattice shape {cells.shape} != ({self.rows}, {self.cols})")
        if cells.min() < 1 or cells.max() > self.colors:
            raise ValueError(f"cell values must lie in 1..{self.colors}")
        return cells.astype(np.int64)

    def constant_state(self, color: int = 1) -> np.ndarray:
        return np.full((self.rows, self.cols), color, dtype=np.int64)

    def random_state(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(1, self.colors + 1, size=(self.rows, self.cols))

    # -- statistics ---------------------------------------------------------

    def suffstat(self, cells: np.ndarray) -> np.ndarray:
        h = np.count_nonzero(cells[:, :-1] == cells[:, 1:])
        v = np.count_nonzero(cells[:-1, :] == cells[1:, :])
        return np.array([h + v], dtype=float)

    def n_edges(self) -> int:
        return self.rows * (self.cols - 1) + (self.rows - 1) * self.cols

    def change_stat(self, cells, site, new_value) -> np.ndarray:
        i, j = site
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"site {site} outside {self.rows}x{self.cols} lattice")
        if not 1 <= new_value <= self.colors:
            raise ValueError(f"color {new_value} outside 1..{self.colors}")
        old = cells[i, j]
        delta = 0
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < self.rows and 0 <= nj < self.cols:
                nb = cells[ni, nj]
                delta += int(nb == new_value) - int(nb == old)
        return np.array([delta], dtype=float)

    def apply_change(self, cells, site, new_value) -> None:
        cells[site] = new_value

    # -- enumeration --------------------------------------------------------

    def state_space_size(self) -> int:
        return self.colors ** (self.rows * self.cols)

    def enumerate_suffstats(self, cap: int = ENUM_CAP_DEFAULT) -> np.ndarray:
        self.check_enumerable(cap)
        if self._enum_cache is None:
            digits = all_digit_arrays(self.rows * self.cols, self.colors) + 1
            grids = digits.reshape(-1, self.rows, self.cols)
            h = np.count_nonzero(grids[:, :, :-1] == grids[:, :, 1:], axis=(1, 2))
            v = np.count_nonzero(grids[:, :-1, :] == grids[:, 1:, :], axis=(1, 2))
            self._enum_cache = (h + v).astype(float).reshape(-1, 1)
        return self._enum_cache

    def state_from_index(self, idx: int) -> np.ndarray:
        ncells = self.rows * self.cols
        digits = np.array(
            [(idx // self.colors**k) % self.colors for k in range(ncells)], dtype=np.int64
        )
        return (digits + 1).reshape(self.rows, self.cols)
