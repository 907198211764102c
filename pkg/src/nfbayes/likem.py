"""Likelihood emulation: estimate the log-likelihood at a handful of
particles via telescoped importance sampling, fit a Gaussian-process
surrogate, and run MH against the surrogate mean plus the log prior."""

from __future__ import annotations

import time

import numpy as np

from .emulation import estimate_loglik_at_particles, farthest_point_thinning
from .gp import GpSurrogate, gp_fit
from .inner import GIBBS, InnerSamplerConfig
from .models import Model
from .outer import DmhKernel, RandomWalkProposal, Trace, run_chain, theta_columns

PARTICLE_MIN = 20


def select_particles(thetas, d: int):
    """Pick d well-spread design points from posterior pre-run draws."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if d < 2:
        raise ValueError("need at least 2 particles")
    return thetas[farthest_point_thinning(thetas, d)]


class SurrogateKernel:
    """MH kernel whose log-target is the GP posterior mean of the
    log-likelihood plus the log prior density."""

    name = "likem"

    def __init__(self, surrogate: GpSurrogate, prior, proposal):
        self.surrogate = surrogate
        self.prior = prior
        self.proposal = proposal

    def log_target(self, theta) -> float:
        lp = self.prior.log_density(theta)
        if lp == -np.inf:
            return -np.inf
        mean, _ = self.surrogate.predict(np.atleast_2d(theta))
        return float(mean[0]) + lp

    def step(self, theta, rng):
        theta_star = self.proposal.propose(theta, rng)
        lt_star = self.log_target(theta_star)
        if lt_star == -np.inf:
            return theta, False
        log_alpha = (
            lt_star
            - self.log_target(theta)
            + self.proposal.log_q_ratio(theta, theta_star)
        )
        if log_alpha >= 0 or np.log(rng.random()) < log_alpha:
            return theta_star, True
        return theta, False


def likem_run(
    data,
    model: Model,
    prior,
    iterations: int,
    rng,
    d: int = PARTICLE_MIN,
    N: int = 10_000,
    seed: int | None = None,
    prerun_iterations: int = 3000,
    prerun_burnin: int | None = None,
    prerun_inner: int = 90,
    inner_kind: str = GIBBS,
    spacing: int = 1,
    proposal_cov=None,
    init_theta=None,
    emulator_path=None,
    out_path=None,
) -> Trace:
    """Full emulation pipeline.

    1. Short DMH pre-run (inner chains of `prerun_inner` cycles) to locate
       the high-posterior region.
    2. Thin the pre-run draws to `d` spread-out particles and estimate the
       log-likelihood at each by telescoped self-normalized importance
       sampling with pools of size `N`.
    3. Fit a GP to the estimates and run `iterations` of MH against the
       surrogate; the trace records the GP hyperparameters.
    """
    data = np.asarray(data)
    data_stat = model.suffstat(data)
    p = model.dim
    t0 = time.perf_counter()

    if init_theta is None:
        init_theta = np.zeros(p)
    cov = np.eye(p) * 0.05 if proposal_cov is None else np.asarray(proposal_cov)
    pre_prop = RandomWalkProposal(cov, adapt=True, adapt_until=prerun_iterations // 2)
    inner = InnerSamplerConfig(inner_kind, prerun_inner)
    pre = run_chain(
        DmhKernel(model, data, prior, pre_prop, inner),
        prerun_iterations,
        init_theta,
        rng,
    )
    if prerun_burnin is None:
        prerun_burnin = prerun_iterations // 3
    draws = pre.theta_matrix()[prerun_burnin:]

    particles = select_particles(draws, d)
    values, noise = estimate_loglik_at_particles(
        particles,
        model,
        data_stat,
        N,
        rng,
        spacing=spacing,
        kind=inner_kind,
        init_state=data,
    )
    surrogate = gp_fit(particles, values, noise_var=noise, rng=rng)
    if emulator_path is not None:
        surrogate.save(emulator_path)

    run_prop = RandomWalkProposal(
        np.cov(draws.T).reshape(p, p) * 2.38**2 / p, adapt=False
    )
    kernel = SurrogateKernel(surrogate, prior, run_prop)
    trace = run_chain(
        kernel,
        iterations,
        particles[int(np.argmax(values))],
        rng,
        seed=seed,
        tuning={
            "d": d,
            "N": N,
            "prerun_inner": prerun_inner,
            "gp_signal_var": surrogate.signal_var,
            "gp_length_scales": list(np.atleast_1d(surrogate.length_scales)),
            "gp_noise_mean": float(np.mean(noise)),
        },
        out_path=out_path,
    )
    trace.columns = theta_columns(p)
    return trace
