"""Approximate curvature diagnostic (ACD).

The second Bartlett identity gives E_pi[vech(u u' + H)] = 0 at the true
posterior, with u the posterior score and H its Jacobian.  For a sample
path the statistic n * dbar' Vhat^{-1} dbar is asymptotically chi^2 with
r = p(p+1)/2 degrees of freedom when the path really targets the
posterior; score and Hessian are approximated by SNIS over a pool of
auxiliary simulations.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .emulation import AuxStatPool, build_pool, snis_moments, snis_moments_many
from .models import Model
from .rng import make_rng

R_CAP_DEFAULT = 400


class DiagnosticDimensionError(Exception):
    """r = p(p+1)/2 too large: the covariance matrix estimate is impractical."""


def vech_indices(p: int):
    """(rows, cols) of the lower triangle in column-major order: (11, 21, .., 22, ..)."""
    rows, cols = [], []
    for j in range(p):
        for i in range(j, p):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


def score_terms(model: Model, data_stat, prior, theta, pool: AuxStatPool):
    """Posterior score u(theta) and Hessian H(theta) via SNIS moments.

    For exponential-family h: u = S(x) - E_theta[S] + grad log p(theta),
    H = -Var_theta[S] + hess log p(theta).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    mom = snis_moments(pool, theta)
    u = np.asarray(data_stat, dtype=float) - mom.mean + prior.grad_log_density(theta)
    H = -mom.cov + prior.hess_log_density(theta)
    return u, H


@dataclass
class CurvatureSeries:
    values: np.ndarray  # n x r
    markov: bool = True
    # pool-noise influence summary: per unique pool value, the effect of one
    # draw on dbar.  Lets the statistic absorb shared-pool Monte Carlo error.
    influence: np.ndarray | None = None  # U x r
    influence_counts: np.ndarray | None = None  # U
    pool_size: int = 0

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def r(self):
        return self.values.shape[1]

    def pool_noise_cov(self) -> np.ndarray | None:
        """Covariance of dbar induced by the shared auxiliary pool."""
        if self.influence is None:
            return None
        psi, c, N = self.influence, self.influence_counts, self.pool_size
        psibar = (c @ psi) / N
        return (psi.T * c) @ psi - N * np.outer(psibar, psibar)


def curvature_series(
    thetas: np.ndarray,
    model: Model,
    data_stat,
    prior,
    pool: AuxStatPool,
    markov: bool = True,
    chunk: int = 2048,
) -> CurvatureSeries:
    """d(theta) = vech[u u' + H] at every retained sample, plus pool influence.

    All samples share one pool, so the SNIS error in (mu, Sigma) is a
    common random field; its first-order influence per pool draw is
    accumulated alongside the series.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[0] == 0:
        raise ValueError("empty trace")
    n, p = thetas.shape
    data_stat = np.asarray(data_stat, dtype=float)
    ri, ci = vech_indices(p)
    vals, counts = pool.compressed()
    U = vals.shape[0]
    N = pool.size
    logN = np.log(N)
    series = np.empty((n, len(ri)))
    psi_sum = np.zeros((U, p, p))
    for start in range(0, n, chunk):
        th = thetas[start : start + chunk]
        m = th.shape[0]
        logw = (th - pool.theta_ref) @ vals.T  # m x U
        shift = logw.max(axis=1, keepdims=True)
        W = np.exp(logw - shift)  # per-draw weight, up to the row shift
        wc = W * counts
        sw = wc.sum(axis=1)
        if np.any(sw == 0) or not np.all(np.isfinite(sw)):
            from .emulation import SnisUnderflowError

            raise SnisUnderflowError("weights underflowed for some trace points")
        mu = (wc @ vals) / sw[:, None]
        second = np.einsum("mu,up,uq->mpq", wc, vals, vals) / sw[:, None, None]
        sigma = second - np.einsum("mp,mq->mpq", mu, mu)
        grads = _grad_many(prior, th)
        u = data_stat[None, :] - mu + grads
        H = -sigma + _hess_many(prior, th)
        M = np.einsum("mp,mq->mpq", u, u) + H
        series[start : start + m] = M[:, ri, ci]
        # influence of one pool draw with value s on d(theta_i):
        #   vech[-(a u' + u a') - b],  a = A (s - mu),  b = A ((s-mu)(s-mu)' - Sigma)
        # with A = w_i(s) / (N m0_i); sw = N m0 in the shifted scale
        A = W / sw[:, None]  # m x U  (shift cancels in w/sum)
        Sc = vals[None, :, :] - mu[:, None, :]  # m x U x p
        T1 = np.einsum("mu,mup,mq->upq", A, Sc, u)
        T3 = np.einsum("mu,mup,muq->upq", A, Sc, Sc)
        T4 = np.einsum("mu,mpq->upq", A, sigma)
        psi_sum += -(T1 + T1.transpose(0, 2, 1) + T3 - T4)
    psi = psi_sum[:, ri, ci] / n
    return CurvatureSeries(
        values=series,
        markov=markov,
        influence=psi,
        influence_counts=counts,
        pool_size=N,
    )


@dataclass
class MultiPoolSeries:
    """Curvature series whose trace points are served by several local pools.

    Each pool covers the trace points nearest its reference, so the SNIS
    weights never have to bridge the full posterior spread.
    """

    values: np.ndarray  # n x r, in original time order
    markov: bool = True
    blocks: list = field(default_factory=list)  # (n_j / n, CurvatureSeries)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def r(self):
        return self.values.shape[1]

    def pool_noise_cov(self) -> np.ndarray | None:
        if not self.blocks:
            return None
        total = 0.0
        for w, cs in self.blocks:
            C = cs.pool_noise_cov()
            if C is not None:
                total = total + w * w * C
        return total


def assign_references(thetas: np.ndarray, refs: int, max_candidates: int = 4000):
    """Pick `refs` spread-out reference points from the trace and assign every
    trace point to its nearest reference (coordinates standardized first)."""
    from .emulation import farthest_point_thinning

    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n = thetas.shape[0]
    mu = thetas.mean(axis=0)
    sd = thetas.std(axis=0)
    sd[sd == 0] = 1.0
    z = (thetas - mu) / sd
    step = max(1, n // max_candidates)
    cand = np.arange(0, n, step)
    idx = cand[farthest_point_thinning(z[cand], min(refs, len(cand)))]
    ref_points = thetas[idx]
    zr = z[idx]
    d2 = ((z[:, None, :] - zr[None, :, :]) ** 2).sum(axis=2)
    return ref_points, np.argmin(d2, axis=1)


def curvature_series_multi(
    thetas: np.ndarray,
    model: Model,
    data_stat,
    prior,
    pools: list,
    assignment: np.ndarray,
    markov: bool = True,
) -> MultiPoolSeries:
    """Curvature series with each trace point evaluated against its assigned
    pool; pool-noise influence is tracked per pool and combined."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n, p = thetas.shape
    r = p * (p + 1) // 2
    values = np.empty((n, r))
    blocks = []
    for j, pool in enumerate(pools):
        idx = np.nonzero(assignment == j)[0]
        if idx.size == 0:
            continue
        cs = curvature_series(
            thetas[idx], model, data_stat, prior, pool, markov=markov
        )
        values[idx] = cs.values
        blocks.append((idx.size / n, cs))
    return MultiPoolSeries(values=values, markov=markov, blocks=blocks)


def _grad_many(prior, thetas):
    n, p = thetas.shape
    out = np.empty((n, p))
    for i in range(n):  # priors here are cheap; specialize if this shows up hot
        out[i] = prior.grad_log_density(thetas[i])
    return out


def _hess_many(prior, thetas):
    n, p = thetas.shape
    out = np.empty((n, p, p))
    for i in range(n):
        out[i] = prior.hess_log_density(thetas[i])
    return out


def batch_means_cov(series: np.ndarray, batch_size: int | None = None) -> np.ndarray:
    """Covariance of sqrt(n) * mean from non-overlapping batch means."""
    series = np.atleast_2d(np.asarray(series, dtype=float))
    if series.ndim == 2 and series.shape[0] == 1:
        series = series.T
    n, r = series.shape
    b = int(np.floor(np.sqrt(n))) if batch_size is None else int(batch_size)
    if n < 2 * b:
        raise ValueError(f"need n >= 2*batch_size, got n={n}, b={b}")
    a = n // b
    means = series[: a * b].reshape(a, b, r).mean(axis=1)
    centered = means - means.mean(axis=0)
    return b * (centered.T @ centered) / (a - 1)


@dataclass
class AcdReport:
    statistics: np.ndarray  # one value per replication
    threshold: float
    dof: int
    n: int
    N: int
    markov: bool = True
    theta_ref: list = field(default_factory=list)
    singular_covariances: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.statistics))

    @property
    def interval(self):
        return (
            float(np.percentile(self.statistics, 2.5)),
            float(np.percentile(self.statistics, 97.5)),
        )

    @property
    def passed(self) -> bool:
        return self.mean < self.threshold

    def to_dict(self) -> dict:
        lo, hi = self.interval
        return {
            "statistics": self.statistics.tolist(),
            "mean": self.mean,
            "interval_lo": lo,
            "interval_hi": hi,
            "threshold": self.threshold,
            "dof": self.dof,
            "passed": bool(self.passed),
            "n": self.n,
            "N": self.N,
            "replications": len(self.statistics),
            "markov": self.markov,
            "theta_ref": self.theta_ref,
            "singular_covariances": self.singular_covariances,
        }

    def save(self, path) -> None:
        with open(str(path), "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def acd_statistic(series: CurvatureSeries, pool_noise: bool = True) -> tuple[float, bool]:
    """n * dbar' Vhat^{-1} dbar; flags whether the pseudo-inverse was needed.

    With pool_noise=True (default) the variance absorbs the shared-pool
    Monte Carlo error n * Cov_pool(dbar): this keeps the null calibration
    intact when n/N is large, and vanishes as N grows.
    """
    d = series.values
    n = series.n
    dbar = d.mean(axis=0)
    if series.markov:
        V = batch_means_cov(d)
    else:
        V = d.T @ d / n
    if pool_noise:
        C = series.pool_noise_cov()
        if C is not None:
            V = V + n * C
    singular = False
    try:
        sol = np.linalg.solve(V, dbar)
    except np.linalg.LinAlgError:
        singular = True
        warnings.warn("ACD covariance estimate singular; using pseudo-inverse")
        sol = np.linalg.pinv(V) @ dbar
    return float(n * dbar @ sol), singular


def acd(
    thetas: np.ndarray,
    model: Model,
    data_stat,
    prior,
    N: int,
    replications: int = 30,
    seed: int = 0,
    markov: bool = True,
    pool_kwargs: dict | None = None,
    dim_cap: int = R_CAP_DEFAULT,
    alpha: float = 0.01,
    stream: tuple = (),
    refs: int = 1,
) -> AcdReport:
    """ACD over fresh auxiliary pools; one statistic per replication.

    Each replication builds a pool of size N at theta_ref = the sample
    mean of the trace, shared across all trace points.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    n, p = thetas.shape
    r = p * (p + 1) // 2
    if r > dim_cap:
        raise DiagnosticDimensionError(
            f"r = p(p+1)/2 = {r} exceeds the cap {dim_cap}: the diagnostic is "
            "impractical at this dimension"
        )
    theta_ref = thetas.mean(axis=0)
    data_stat = np.asarray(data_stat, dtype=float)
    pool_kwargs = dict(pool_kwargs or {})
    pool_kwargs.setdefault("exact", model.state_space_size() <= 2**20)
    if refs > 1:
        ref_points, assignment = assign_references(thetas, refs)
    stats = np.empty(replications)
    n_singular = 0
    for rep in range(replications):
        rng = make_rng(seed, *stream, rep)
        if refs > 1:
            pools = [
                build_pool(model, rp, N, rng=rng, **pool_kwargs) for rp in ref_points
            ]
            series = curvature_series_multi(
                thetas, model, data_stat, prior, pools, assignment, markov=markov
            )
        else:
            pool = build_pool(model, theta_ref, N, rng=rng, **pool_kwargs)
            series = curvature_series(
                thetas, model, data_stat, prior, pool, markov=markov
            )
        stats[rep], singular = acd_statistic(series)
        n_singular += singular
    return AcdReport(
        statistics=stats,
        threshold=float(chi2.ppf(1 - alpha, r)),
        dof=r,
        n=n,
        N=N,
        markov=markov,
        theta_ref=theta_ref.tolist(),
        singular_covariances=n_singular,
    )
