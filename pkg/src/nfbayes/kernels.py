"""Numba kernels for the inner (fixed-theta) samplers.

These are the hot loops: every outer algorithm burns most of its time here.
All kernels mutate the state array in place and draw from the passed
np.random.Generator, so trajectories are reproducible from the caller's
stream.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def potts_gibbs_cycles(cells, K, theta, cycles, rng):
    rows, cols = cells.shape
    counts = np.zeros(K, dtype=np.int64)
    weights = np.empty(K)
    for _ in range(cycles):
        for i in range(rows):
            for j in range(cols):
                for c in range(K):
                    counts[c] = 0
                if i > 0:
                    counts[cells[i - 1, j] - 1] += 1
                if i < rows - 1:
                    counts[cells[i + 1, j] - 1] += 1
                if j > 0:
                    counts[cells[i, j - 1] - 1] += 1
                if j < cols - 1:
                    counts[cells[i, j + 1] - 1] += 1
                total = 0.0
                for c in range(K):
                    weights[c] = np.exp(theta * counts[c])
                    total += weights[c]
                u = rng.random() * total
                acc = 0.0
                newc = K - 1
                for c in range(K):
                    acc += weights[c]
                    if u < acc:
                        newc = c
                        break
                cells[i, j] = newc + 1


@njit(cache=True)
def _uf_find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def potts_sw_cycles(cells, K, theta, cycles, rng):
    rows, cols = cells.shape
    n = rows * cols
    parent = np.empty(n, dtype=np.int64)
    root_color = np.empty(n, dtype=np.int64)
    p_bond = 1.0 - np.exp(-theta)
    for _ in range(cycles):
        for s in range(n):
            parent[s] = s
        # open bonds between matching neighbors with probability 1 - e^{-theta}
        for i in range(rows):
            for j in range(cols):
                s = i * cols + j
                if j < cols - 1 and cells[i, j] == cells[i, j + 1]:
                    if rng.random() < p_bond:
                        ra = _uf_find(parent, s)
                        rb = _uf_find(parent, s + 1)
                        parent[ra] = rb
                if i < rows - 1 and cells[i, j] == cells[i + 1, j]:
                    if rng.random() < p_bond:
                        ra = _uf_find(parent, s)
                        rb = _uf_find(parent, s + cols)
                        parent[ra] = rb
        # relabel each cluster uniformly over the K colors
        for s in range(n):
            root_color[s] = 0
        for i in range(rows):
            for j in range(cols):
                s = i * cols + j
                r = _uf_find(parent, s)
                if root_color[r] == 0:
                    root_color[r] = rng.integers(1, K + 1)
                cells[i, j] = root_color[r]


@njit(cache=True)
def ergm_gibbs_cycles(adj, theta1, theta2, weights, cycles, rng):
    n = adj.shape[0]
    for _ in range(cycles):
        for i in range(n):
            for j in range(i + 1, n):
                # condition on the rest with the edge removed, then redraw it
                adj[i, j] = 0
                adj[j, i] = 0
                cn = 0
                d2 = 0.0
                for u in range(n):
                    if adj[i, u] == 1 and adj[j, u] == 1:
                        cn += 1
                        k_iu = 0
                        k_ju = 0
                        for v in range(n):
                            if adj[i, v] == 1 and adj[u, v] == 1:
                                k_iu += 1
                            if adj[j, v] == 1 and adj[u, v] == 1:
                                k_ju += 1
                        d2 += (weights[k_iu + 1] - weights[k_iu]) + (
                            weights[k_ju + 1] - weights[k_ju]
                        )
                d2 += weights[cn]
                logit = theta1 + theta2 * d2
                p1 = 1.0 / (1.0 + np.exp(-logit))
                if rng.random() < p1:
                    adj[i, j] = 1
                    adj[j, i] = 1


@njit(cache=True)
def isingnet_gibbs_cycles(x, beta, gamma, cycles, rng):
    n, p = x.shape
    for _ in range(cycles):
        for i in range(n):
            for j in range(p):
                logit = beta[j]
                for k in range(p):
                    if k != j:
                        logit += gamma[j, k] * x[i, k]
                p1 = 1.0 / (1.0 + np.exp(-logit))
                x[i, j] = 1 if rng.random() < p1 else 0
