"""Two-statistic ERGM: edges and GWESP (decay fixed at 0.2) on undirected graphs.

States are symmetric 0/1 adjacency matrices with zero diagonal.  ESP_k is the
number of connected node pairs with exactly k common neighbors; GWESP sums
ESP_k with geometrically decaying weights.
"""

from __future__ import annotations

import numpy as np

from .base import Model, ENUM_CAP_DEFAULT

GWESP_DECAY = 0.2


def gwesp_weights(n: int, decay: float = GWESP_DECAY) -> np.ndarray:
    """Weight table w[k] applied to an edge with k shared partners; w[0] = 0."""
    k = np.arange(n)
    w = np.exp(decay) * (1.0 - (1.0 - np.exp(-decay)) ** k)
    w[0] = 0.0
    return w


class ErgmModel(Model):
    dim = 2

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one node")
        self.n = n
        self.weights = gwesp_weights(n)
        self._enum_cache = None

    # -- states -------------------------------------------------------------

    def validate_state(self, adj: np.ndarray) -> np.ndarray:
        adj = np.asarray(adj)
        if adj.shape != (self.n, self.n):
            raise ValueError(f"adjacency shape {adj.shape} != ({self.n}, {self.n})")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise ValueError("adjacency must have zero diagonal")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency must be binary")
        return adj.astype(np.int64)

    def empty_state(self) -> np.ndarray:
        return np.zeros((self.n, self.n), dtype=np.int64)

    def random_state(self, rng: np.random.Generator, p: float = 0.5) -> np.ndarray:
        upper = rng.random((self.n, self.n)) < p
        adj = np.triu(upper, 1).astype(np.int64)
        return adj + adj.T

    def dyads(self):
        """All node pairs (i, j) with i < j, in row-major order."""
        iu, ju = np.triu_indices(self.n, 1)
        return list(zip(iu.tolist(), ju.tolist()))

    # -- statistics ---------------------------------------------------------

    def suffstat(self, adj: np.ndarray) -> np.ndarray:
        edges = int(adj.sum()) // 2
        shared = adj @ adj  # shared[i, j] = common neighbors of i and j
        iu, ju = np.triu_indices(self.n, 1)
        mask = adj[iu, ju] == 1
        gwesp = self.weights[shared[iu, ju][mask]].sum()
        return np.array([edges, gwesp], dtype=float)

    def esp_counts(self, adj: np.ndarray) -> np.ndarray:
        """Brute-force ESP_k histogram over all connected pairs, O(n^3)."""
        counts = np.zeros(self.n, dtype=np.int64)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if adj[i, j]:
                    k = int(np.count_nonzero(adj[i] & adj[j]))
                    counts[k] += 1
        return counts

    def suffstat_bruteforce(self, adj: np.ndarray) -> np.ndarray:
        """Independent oracle: GWESP from the explicit ESP_k histogram."""
        counts = self.esp_counts(adj)
        return np.array([adj.sum() // 2, float(self.weights @ counts)])

    def change_stat(self, adj, dyad, new_value) -> np.ndarray:
        i, j = dyad
        if not (0 <= i < self.n and 0 <= j < self.n) or i == j:
            raise IndexError(f"invalid dyad {dyad}")
        if new_value not in (0, 1):
            raise ValueError("edge value must be 0 or 1")
        old = adj[i, j]
        if new_value == old:
            return np.zeros(2)
        sign = 1 if new_value == 1 else -1
        common = adj[i] & adj[j]
        cn_ij = int(common.sum())
        w = self.weights
        # the toggled edge itself enters/leaves the ESP count at its partner count
        d2 = sign * w[cn_ij]
        # each common neighbor u: edges (i,u) and (j,u) gain/lose partner j resp. i
        for u in np.flatnonzero(common):
            k_iu = int(np.count_nonzero(adj[i] & adj[u]))
            k_ju = int(np.count_nonzero(adj[j] & adj[u]))
            d2 += (w[k_iu + sign] - w[k_iu]) + (w[k_ju + sign] - w[k_ju])
        return np.array([sign, d2], dtype=float)

    def apply_change(self, adj, dyad, new_value) -> None:
        i, j = dyad
        adj[i, j] = new_value
        adj[j, i] = new_value

    # -- enumeration --------------------------------------------------------

    def n_dyads(self) -> int:
        return self.n * (self.n - 1) // 2

    def state_space_size(self) -> int:
        return 2 ** self.n_dyads()

    def enumerate_suffstats(self, cap: int = ENUM_CAP_DEFAULT) -> np.ndarray:
        self.check_enumerable(cap)
        if self._enum_cache is None:
            stats = np.empty((self.state_space_size(), 2))
            for idx in range(stats.shape[0]):
                stats[idx] = self.suffstat(self.state_from_index(idx))
            self._enum_cache = stats
        return self._enum_cache

    def state_from_index(self, idx: int) -> np.ndarray:
        adj = self.empty_state()
        iu, ju = np.triu_indices(self.n, 1)
        for b in range(len(iu)):
            if (idx >> b) & 1:
                adj[iu[b], ju[b]] = 1
                adj[ju[b], iu[b]] = 1
        return adj
