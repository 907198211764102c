"""Adaptive normalizing-function approximation (ALR).

Maintains a pool of sufficient statistics at each of d particles, grown by
persistent inner chains.  log c(theta) - log c(theta_ref) is estimated by
telescoped SNIS through a nearest-particle path, and an MH chain on theta
runs with the running estimate substituted for the true normalizer.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.special import logsumexp

from .emulation import nearest_neighbor_path
from .inner import GIBBS, run_cycles
from .models import Model
from .outer import Trace, theta_columns

POOL_CAP_DEFAULT = 100_000


class AlrSampler:
    """Holds the particle pools and running normalizer-ratio estimates."""

    name = "alr"

    def __init__(
        self,
        model: Model,
        data,
        prior,
        proposal,
        particles,
        inner_kind: str = GIBBS,
        cycles_per_iter: int = 1,
        grow_until: int = 2000,
        pool_cap: int = POOL_CAP_DEFAULT,
    ):
        particles = np.atleast_2d(np.asarray(particles, dtype=float))
        if particles.shape[0] < 2:
            raise ValueError("ALR needs at least 2 particles")
        self.model = model
        self.prior = prior
        self.proposal = proposal
        self.particles = particles
        self.d = particles.shape[0]
        self.inner_kind = inner_kind
        self.cycles_per_iter = cycles_per_iter
        self.grow_until = grow_until
        self.pool_cap = pool_cap
        self.data = np.array(data, copy=True)
        self.data_stat = model.suffstat(data)
        # inner chains start at the observed data
        self.chain_states = [np.array(data, copy=True) for _ in range(self.d)]
        self.pools = [[] for _ in range(self.d)]
        self.path = nearest_neighbor_path(particles)
        # per-hop running logsumexp of (theta_b - theta_a)' S over pool a
        # (column 0, forward) and (theta_a - theta_b)' S over pool b
        # (column 1, reverse); averaging the two directed estimates cancels
        # the leading-order Jensen bias that would otherwise accumulate
        # along long telescoped paths
        self.hop_lse = np.full((self.d - 1, 2), -np.inf)
        self.hop_n = np.zeros((self.d - 1, 2), dtype=np.int64)
        # log c(particle k) relative to the path start, by telescoping
        self.log_c_particles = np.zeros(self.d)
        nn = self._nn_spacing()
        self.hull_radius = 2.0 * nn
        self.extrapolation_warnings = 0
        self._pool_cache: dict[int, np.ndarray] = {}

    def _pool_array(self, j: int) -> np.ndarray:
        cached = self._pool_cache.get(j)
        if cached is None or cached.shape[0] != len(self.pools[j]):
            cached = np.array(self.pools[j])
            self._pool_cache[j] = cached
        return cached

    def _nn_spacing(self) -> float:
        dmax = 0.0
        for k in range(self.d):
            dist = np.linalg.norm(self.particles - self.particles[k], axis=1)
            dist[k] = np.inf
            dmax = max(dmax, dist.min())
        return dmax

    # -- pool growth ---------------------------------------------------------

    def grow(self, rng) -> None:
        """Advance every particle's inner chain and bank the new statistics."""
        for k in range(self.d):
            if len(self.pools[k]) >= self.pool_cap:
                continue  # reservoir cap: stop growing (estimates stay fixed)
            run_cycles(
                self.model,
                self.chain_states[k],
                self.particles[k],
                self.inner_kind,
                self.cycles_per_iter,
                rng,
            )
            s = self.model.suffstat(self.chain_states[k])
            self.pools[k].append(s)
        self._refresh_path_estimates()

    def _refresh_path_estimates(self) -> None:
        for h in range(self.d - 1):
            a, b = self.path[h], self.path[h + 1]
            delta = self.particles[b] - self.particles[a]
            for col, (src, sign) in enumerate(((a, 1.0), (b, -1.0))):
                pool = self.pools[src]
                if len(pool) > self.hop_n[h, col]:
                    terms = np.array(pool[self.hop_n[h, col] :]) @ (sign * delta)
                    self.hop_lse[h, col] = np.logaddexp(
                        self.hop_lse[h, col], logsumexp(terms)
                    )
                    self.hop_n[h, col] = len(pool)
        log_c = np.zeros(self.d)
        for h in range(self.d - 1):
            a, b = self.path[h], self.path[h + 1]
            fwd = self.hop_lse[h, 0] - np.log(max(self.hop_n[h, 0], 1))
            rev = self.hop_lse[h, 1] - np.log(max(self.hop_n[h, 1], 1))
            log_c[b] = log_c[a] + 0.5 * (fwd - rev)
        self.log_c_particles = log_c

    # -- normalizer estimate --------------------------------------------------

    def log_c_hat(self, theta, count_warning: bool = False) -> float:
        """Running estimate of log c(theta) relative to the path start."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        dist = np.linalg.norm(self.particles - theta, axis=1)
        j = int(np.argmin(dist))
        if count_warning and dist[j] > self.hull_radius:
            self.extrapolation_warnings += 1
        if not self.pools[j]:
            raise RuntimeError("pools are empty; call grow() first")
        delta = theta - self.particles[j]
        if not delta.any():
            return float(self.log_c_particles[j])
        pool = self._pool_array(j)
        terms = pool @ delta
        return float(self.log_c_particles[j] + logsumexp(terms) - np.log(len(pool)))

    # -- MH step --------------------------------------------------------------

    def step(self, theta, rng):
        theta_star = self.proposal.propose(theta, rng)
        lp_star = self.prior.log_density(theta_star)
        if lp_star == -np.inf:
            return theta, False
        log_alpha = (
            lp_star
            - self.prior.log_density(theta)
            + (theta_star - theta) @ self.data_stat
            - (self.log_c_hat(theta_star, count_warning=True) - self.log_c_hat(theta))
            + self.proposal.log_q_ratio(theta, theta_star)
        )
        if log_alpha >= 0 or np.log(rng.random()) < log_alpha:
            return theta_star, True
        return theta, False


def alr_run(
    data,
    model: Model,
    prior,
    proposal,
    particles,
    iterations: int,
    rng,
    seed: int | None = None,
    inner_kind: str = GIBBS,
    cycles_per_iter: int = 1,
    grow_until: int = 2000,
    pool_cap: int = POOL_CAP_DEFAULT,
    init_theta=None,
) -> Trace:
    """Run ALR for `iterations` outer steps; pools grow for the first
    `grow_until` iterations (1 inner cycle per particle per iteration)."""
    sampler = AlrSampler(
        model,
        data,
        prior,
        proposal,
        particles,
        inner_kind=inner_kind,
        cycles_per_iter=cycles_per_iter,
        grow_until=grow_until,
        pool_cap=pool_cap,
    )
    theta = np.atleast_1d(
        np.asarray(
            sampler.particles.mean(axis=0) if init_theta is None else init_theta,
            dtype=float,
        )
    ).copy()
    p = len(theta)
    samples = np.empty((iterations, p))
    accepted = 0
    t0 = time.perf_counter()
    sampler.grow(rng)  # seed the pools before the first step
    for i in range(iterations):
        if i < grow_until:
            sampler.grow(rng)
        proposal.observe(theta, i)
        theta, acc = sampler.step(theta, rng)
        accepted += acc
        samples[i] = theta
    return Trace(
        samples=samples,
        columns=theta_columns(p),
        accepted=accepted,
        sampler="alr",
        tuning={
            "d": sampler.d,
            "cycles_per_iter": cycles_per_iter,
            "grow_until": grow_until,
        },
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
        warnings={"extrapolation": sampler.extrapolation_warnings},
    )
