"""Self-normalized importance sampling over pools of simulated sufficient statistics.

A pool holds S(y) for draws y ~ f(.|theta_ref).  Reweighting by
exp((theta - theta_ref)'S) gives normalizer ratios c(theta)/c(theta_ref)
and posterior-free estimates of E_theta[S] and Var_theta[S] — the raw
material for the curvature diagnostic, ALR, and the likelihood emulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .inner import GIBBS, run_cycles, exact_sample
from .models import ENUM_CAP_DEFAULT, Model


class SnisUnderflowError(Exception):
    """All importance weights underflowed: theta is too far from theta_ref."""


@dataclass
class AuxStatPool:
    theta_ref: np.ndarray
    stats: np.ndarray  # N x p
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta_ref = np.atleast_1d(np.asarray(self.theta_ref, dtype=float))
        self.stats = np.atleast_2d(np.asarray(self.stats, dtype=float))
        if self.stats.shape[0] < 1:
            raise ValueError("pool needs at least one statistic")
        if self.stats.shape[1] != len(self.theta_ref):
            raise ValueError("stat width does not match theta_ref dimension")
        self._compressed = None

    @property
    def size(self) -> int:
        return self.stats.shape[0]

    def compressed(self):
        """(unique rows, counts): integer-valued stats compress massively."""
        if self._compressed is None:
            vals, counts = np.unique(self.stats, axis=0, return_counts=True)
            self._compressed = (vals, counts.astype(float))
        return self._compressed


@dataclass
class SnisMoments:
    log_ratio: float  # log c(theta) - log c(theta_ref)
    mean: np.ndarray
    cov: np.ndarray
    ess: float


def build_pool(
    model: Model,
    theta_ref,
    N: int,
    spacing: int = 1,
    rng=None,
    kind: str = GIBBS,
    burnin: int | None = None,
    init_state=None,
    exact: bool = False,
    cap: int = ENUM_CAP_DEFAULT,
) -> AuxStatPool:
    """Simulate N sufficient statistics at theta_ref, `spacing` cycles apart.

    With exact=True (enumerable models only) the draws are iid from the
    enumerated distribution, bypassing the inner chain entirely.
    """
    theta_ref = model.check_theta(theta_ref)
    if N < 1:
        raise ValueError("N must be >= 1")
    if exact:
        probs = model.enumerate_distribution(theta_ref, cap)
        stats_all = model.enumerate_suffstats(cap)
        idx = rng.choice(len(probs), size=N, p=probs)
        return AuxStatPool(
            theta_ref, stats_all[idx], meta={"method": "exact", "N": N}
        )
    if init_state is None:
        init_state = model.random_state(rng)
    state = np.array(init_state, copy=True)
    if burnin is None:
        burnin = max(200, 10 * spacing)
    run_cycles(model, state, theta_ref, kind, burnin, rng)
    stats = np.empty((N, model.dim))
    for l in range(N):
        run_cycles(model, state, theta_ref, kind, spacing, rng)
        stats[l] = model.suffstat(state)
    return AuxStatPool(
        theta_ref,
        stats,
        meta={"method": kind, "N": N, "spacing": spacing, "burnin": burnin},
    )


def snis_moments(pool: AuxStatPool, theta) -> SnisMoments:
    """SNIS log normalizer ratio, weighted mean/covariance of S, and ESS."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != pool.theta_ref.shape:
        raise ValueError("theta dimension does not match the pool")
    vals, counts = pool.compressed()
    delta = theta - pool.theta_ref
    logw = vals @ delta
    shift = logw.max()
    if not np.isfinite(shift):
        raise SnisUnderflowError(f"importance weights degenerate at |delta|={np.linalg.norm(delta)}")
    w = np.exp(logw - shift) * counts
    sw = w.sum()
    if sw == 0 or not np.isfinite(sw):
        raise SnisUnderflowError(
            f"all weights underflowed; |theta - theta_ref| = {np.linalg.norm(delta)} too large"
        )
    log_ratio = float(logsumexp(logw, b=counts) - np.log(pool.size))
    mean = (w @ vals) / sw
    centered = vals - mean
    cov = (centered.T * w) @ centered / sw
    sw2 = float(np.exp(logw - shift) ** 2 @ counts)
    ess = sw**2 / sw2
    return SnisMoments(log_ratio=log_ratio, mean=mean, cov=cov, ess=float(ess))


def snis_moments_many(pool: AuxStatPool, thetas: np.ndarray, chunk: int = 4096):
    """Vectorized SNIS over many theta values sharing one pool.

    Returns (log_ratios (n,), means (n,p), covs (n,p,p), ess (n,)).
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n, p = thetas.shape
    vals, counts = pool.compressed()
    log_ratios = np.empty(n)
    means = np.empty((n, p))
    covs = np.empty((n, p, p))
    ess = np.empty(n)
    logN = np.log(pool.size)
    for start in range(0, n, chunk):
        th = thetas[start : start + chunk]
        logw = (th - pool.theta_ref) @ vals.T  # m x U
        shift = logw.max(axis=1, keepdims=True)
        w = np.exp(logw - shift) * counts
        sw = w.sum(axis=1)
        bad = (sw == 0) | ~np.isfinite(sw)
        if bad.any():
            raise SnisUnderflowError("weights underflowed for some trace points")
        log_ratios[start : start + chunk] = (
            np.log(sw) + shift.ravel() - logN
        )
        mu = (w @ vals) / sw[:, None]
        means[start : start + chunk] = mu
        second = np.einsum("mu,up,uq->mpq", w, vals, vals) / sw[:, None, None]
        covs[start : start + chunk] = second - np.einsum("mp,mq->mpq", mu, mu)
        sw2 = (np.exp(logw - shift) ** 2 * counts).sum(axis=1)
        ess[start : start + chunk] = sw**2 / sw2
    return log_ratios, means, covs, ess


def nearest_neighbor_path(particles: np.ndarray) -> np.ndarray:
    """Particle visit order: start nearest the centroid, hop to nearest unvisited."""
    particles = np.atleast_2d(particles)
    d = particles.shape[0]
    centroid = particles.mean(axis=0)
    order = np.empty(d, dtype=np.int64)
    visited = np.zeros(d, dtype=bool)
    cur = int(np.argmin(np.linalg.norm(particles - centroid, axis=1)))
    order[0] = cur
    visited[cur] = True
    for k in range(1, d):
        dist = np.linalg.norm(particles - particles[cur], axis=1)
        dist[visited] = np.inf
        cur = int(np.argmin(dist))
        order[k] = cur
        visited[cur] = True
    return order


def estimate_loglik_at_particles(
    particles: np.ndarray,
    model: Model,
    data_stat: np.ndarray,
    N: int,
    rng,
    spacing: int = 1,
    kind: str = GIBBS,
    init_state=None,
    ess_floor: float = 50.0,
    exact: bool = False,
):
    """Unnormalized log-likelihood estimates at each particle (common constant).

    Telescopes log c between adjacent particles along a nearest-neighbor
    path, with a fresh pool at each hop source.  Returns (values, noise
    variances), both length d; the start of the path has value
    theta'S(x) and zero variance.
    """
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    d = particles.shape[0]
    data_stat = np.asarray(data_stat, dtype=float)
    values = np.empty(d)
    noise = np.empty(d)
    if d == 1:
        values[0] = particles[0] @ data_stat
        noise[0] = 0.0
        return values, noise
    order = nearest_neighbor_path(particles)
    log_c = np.zeros(d)  # relative to the path start
    var_c = np.zeros(d)
    for hop in range(d - 1):
        a, b = order[hop], order[hop + 1]
        if np.allclose(particles[a], particles[b]):
            log_c[b] = log_c[a]
            var_c[b] = var_c[a]
            continue
        pool = build_pool(
            model,
            particles[a],
            N,
            spacing=spacing,
            rng=rng,
            kind=kind,
            init_state=init_state,
            exact=exact,
        )
        mom = snis_moments(pool, particles[b])
        if mom.ess < ess_floor:
            raise SnisUnderflowError(
                f"ESS {mom.ess:.1f} below floor {ess_floor} on hop {a}->{b}; "
                "use more particles or a larger N"
            )
        log_c[b] = log_c[a] + mom.log_ratio
        # delta-method variance of the log mean weight
        var_c[b] = var_c[a] + max(1.0 / mom.ess - 1.0 / pool.size, 0.0)
    values[:] = particles @ data_stat - log_c
    noise[:] = var_c
    return values, noise


def farthest_point_thinning(points: np.ndarray, d: int) -> np.ndarray:
    """Indices of d space-filling points (greedy farthest-point), first = medoid."""
    points = np.atleast_2d(points)
    n = points.shape[0]
    if d >= n:
        return np.arange(n)
    centroid = points.mean(axis=0)
    chosen = [int(np.argmin(np.linalg.norm(points - centroid, axis=1)))]
    mindist = np.linalg.norm(points - points[chosen[0]], axis=1)
    for _ in range(1, d):
        nxt = int(np.argmax(mindist))
        chosen.append(nxt)
        mindist = np.minimum(mindist, np.linalg.norm(points - points[nxt], axis=1))
    return np.array(chosen, dtype=np.int64)
