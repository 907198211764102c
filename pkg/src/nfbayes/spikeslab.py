"""Spike-and-slab variable selection for network item-response models.

The interaction/main-effect vector theta gets a mixture-normal prior
    theta_i | lambda_i ~ N(0, omega^2 sigma^2) if lambda_i = 1 else N(0, sigma^2)
with lambda_i ~ Bernoulli(1/2), 1/sigma^2 ~ Uniform(4, 100), and
omega = 1 + Y with Y exponential with mean 100.  theta is updated by DMH,
lambda by its exact Bernoulli conditional, and (sigma^2, omega) by
random-walk MH on log scales.
"""

from __future__ import annotations

import time

import numpy as np

from .inner import GIBBS, run_cycles
from .models import IsingNetworkModel
from .outer import Trace, theta_columns

INV_SIGMA2_LO = 4.0
INV_SIGMA2_HI = 100.0
OMEGA_Y_MEAN = 100.0


def _log_normal_pdf(x, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + x * x / var)


def prior_variances(lam, sigma2: float, omega: float):
    """Per-coordinate prior variance given the inclusion indicators."""
    return np.where(lam == 1, omega * omega * sigma2, sigma2)


def log_prior_theta(theta, lam, sigma2: float, omega: float) -> float:
    return float(_log_normal_pdf(theta, prior_variances(lam, sigma2, omega)).sum())


def sample_lambda(theta, sigma2: float, omega: float, rng):
    """Exact Bernoulli conditional for each inclusion indicator."""
    l1 = _log_normal_pdf(theta, omega * omega * sigma2)
    l0 = _log_normal_pdf(theta, sigma2)
    p1 = 1.0 / (1.0 + np.exp(l0 - l1))
    return (rng.random(theta.shape) < p1).astype(np.int64)


def _reflect(x: float, lo: float, hi: float) -> float:
    width = hi - lo
    y = (x - lo) % (2.0 * width)
    if y > width:
        y = 2.0 * width - y
    return lo + y


def spike_slab_dmh_run(
    data,
    iterations: int,
    rng,
    m: int | None = None,
    seed: int | None = None,
    theta_scale: float = 0.1,
    hyper_scale: float = 0.3,
    update_hyper: bool = True,
    init_sigma2: float | None = None,
    init_omega: float = 2.0,
    likelihood_off: bool = False,
    inner_kind: str = GIBBS,
    flush_every: int | None = None,
    out_path=None,
) -> Trace:
    """Gibbs-within-MH over (theta, lambda, sigma^2, omega).

    `m` is the inner-chain length for the DMH theta update; defaults to
    10 * n_respondents.  With `likelihood_off` the data terms are dropped and
    theta is drawn exactly from its conditional prior (useful for checking
    the prior marginals, e.g. P(lambda_i = 1) -> 1/2).
    """
    data = np.asarray(data)
    n, p = data.shape
    model = IsingNetworkModel(n, p)
    q = model.dim
    if m is None:
        m = 10 * n
    data_stat = model.suffstat(data)

    theta = np.zeros(q)
    lam = rng.integers(0, 2, size=q)
    sigma2 = 1.0 / 52.0 if init_sigma2 is None else float(init_sigma2)
    omega = float(init_omega)
    if not (INV_SIGMA2_LO < 1.0 / sigma2 < INV_SIGMA2_HI):
        raise ValueError("init_sigma2 outside the supported precision range")

    cols = (
        theta_columns(q)
        + [f"lambda_{i}" for i in range(1, q + 1)]
        + ["sigma2", "omega"]
    )
    samples = np.empty((iterations, len(cols)))
    accepted = 0
    t0 = time.perf_counter()

    for it in range(iterations):
        # -- theta | rest -----------------------------------------------------
        if likelihood_off:
            theta = rng.normal(0.0, np.sqrt(prior_variances(lam, sigma2, omega)))
            accepted += 1
        else:
            theta_star = theta + theta_scale * rng.standard_normal(q)
            aux = np.array(data, copy=True)
            run_cycles(model, aux, theta_star, inner_kind, m, rng)
            aux_stat = model.suffstat(aux)
            log_alpha = (
                log_prior_theta(theta_star, lam, sigma2, omega)
                - log_prior_theta(theta, lam, sigma2, omega)
                + (theta_star - theta) @ data_stat
                + (theta - theta_star) @ aux_stat
            )
            if log_alpha >= 0 or np.log(rng.random()) < log_alpha:
                theta = theta_star
                accepted += 1

        # -- lambda | theta, hypers (exact) ------------------------------------
        lam = sample_lambda(theta, sigma2, omega, rng)

        if update_hyper:
            # -- sigma^2: random walk on log precision, reflected into (4, 100)
            x = np.log(1.0 / sigma2)
            x_star = _reflect(
                x + hyper_scale * rng.standard_normal(),
                np.log(INV_SIGMA2_LO),
                np.log(INV_SIGMA2_HI),
            )
            sigma2_star = 1.0 / np.exp(x_star)
            # uniform prior on the precision; e^x Jacobian for the log scale
            log_alpha = (
                log_prior_theta(theta, lam, sigma2_star, omega)
                - log_prior_theta(theta, lam, sigma2, omega)
                + (x_star - x)
            )
            if log_alpha >= 0 or np.log(rng.random()) < log_alpha:
                sigma2 = sigma2_star

            # -- omega: random walk on log(omega - 1)
            z = np.log(omega - 1.0)
            z_star = z + hyper_scale * rng.standard_normal()
            omega_star = 1.0 + np.exp(z_star)
            log_alpha = (
                log_prior_theta(theta, lam, sigma2, omega_star)
                - log_prior_theta(theta, lam, sigma2, omega)
                - (np.exp(z_star) - np.exp(z)) / OMEGA_Y_MEAN
                + (z_star - z)
            )
            if log_alpha >= 0 or np.log(rng.random()) < log_alpha:
                omega = omega_star

        samples[it, :q] = theta
        samples[it, q : 2 * q] = lam
        samples[it, 2 * q] = sigma2
        samples[it, 2 * q + 1] = omega

    trace = Trace(
        samples=samples,
        columns=cols,
        accepted=accepted,
        sampler="spike_slab_dmh",
        tuning={"m": m, "theta_scale": theta_scale, "update_hyper": update_hyper},
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
    )
    if out_path is not None:
        trace.save(out_path)
    return trace


def inclusion_probabilities(trace: Trace, burnin: int = 0):
    """Posterior P(lambda_i = 1) per coordinate from a spike-slab trace."""
    lam_cols = [i for i, c in enumerate(trace.columns) if c.startswith("lambda_")]
    return trace.samples[burnin:, lam_cols].mean(axis=0)


def shrunk_coordinates(trace: Trace, burnin: int = 0, cutoff: float = 0.5):
    """Indices (0-based) whose posterior inclusion probability is below cutoff."""
    probs = inclusion_probabilities(trace, burnin)
    return np.nonzero(probs < cutoff)[0], probs
