"""Fixed-theta simulation from f(.|theta): Gibbs sweeps, Swendsen-Wang, exact draws.

The Metropolis-Hastings/Gibbs updates here never touch c(theta); this is
exactly why simulation is easy while inference is not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .models import (
    ENUM_CAP_DEFAULT,
    ErgmModel,
    IntractableSizeError,
    IsingNetworkModel,
    Model,
    PottsModel,
)
from .rng import make_rng

GIBBS = "gibbs"
SWENDSEN_WANG = "swendsen-wang"


class ExactSamplingUnavailableError(IntractableSizeError):
    """Exact sampling requires full enumeration; unavailable beyond the cap."""


@dataclass
class InnerSamplerConfig:
    kind: str = GIBBS
    cycles: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.cycles < 0:
            raise ValueError("cycles must be >= 0")
        if self.kind not in (GIBBS, SWENDSEN_WANG):
            raise ValueError(f"unknown inner sampler kind {self.kind!r}")


def gibbs_cycle(model: Model, state, theta, rng, cycles: int = 1):
    """Systematic single-site (or single-dyad) Gibbs sweeps, in place."""
    theta = model.check_theta(theta)
    if isinstance(model, PottsModel):
        kernels.potts_gibbs_cycles(state, model.colors, theta[0], cycles, rng)
    elif isinstance(model, ErgmModel):
        kernels.ergm_gibbs_cycles(state, theta[0], theta[1], model.weights, cycles, rng)
    elif isinstance(model, IsingNetworkModel):
        beta, gamma = model.split_theta(theta)
        kernels.isingnet_gibbs_cycles(state, beta, gamma, cycles, rng)
    else:
        raise TypeError(f"no Gibbs kernel for {type(model).__name__}")
    return state


def swendsen_wang_cycle(model: PottsModel, lattice, theta, rng, cycles: int = 1):
    """Swendsen-Wang cluster cycles for the Potts model, in place."""
    theta = model.check_theta(theta)
    if not isinstance(model, PottsModel):
        raise TypeError("Swendsen-Wang applies only to Potts lattices")
    if theta[0] < 0:
        raise ValueError("Swendsen-Wang needs theta >= 0 (bond probabilities)")
    kernels.potts_sw_cycles(lattice, model.colors, theta[0], cycles, rng)
    return lattice


def run_cycles(model: Model, state, theta, kind: str, cycles: int, rng):
    if cycles == 0:
        return state
    if kind == SWENDSEN_WANG:
        return swendsen_wang_cycle(model, state, theta, rng, cycles)
    return gibbs_cycle(model, state, theta, rng, cycles)


def simulate(model: Model, theta, config: InnerSamplerConfig, init_state, rng=None):
    """Run `config.cycles` inner cycles from a copy of `init_state`.

    Deterministic given (config.seed) when no generator is passed.
    """
    if rng is None:
        rng = make_rng(config.seed)
    state = np.array(init_state, copy=True)
    return run_cycles(model, state, theta, config.kind, config.cycles, rng)


def exact_sample(model: Model, theta, rng, cap: int = ENUM_CAP_DEFAULT):
    """Exact draw from f(.|theta) by inverse CDF over the enumerated state space."""
    theta = model.check_theta(theta)
    if isinstance(model, IsingNetworkModel):
        # rows are iid: draw each respondent's pattern exactly
        try:
            model.check_enumerable(cap)
        except IntractableSizeError as e:
            raise ExactSamplingUnavailableError(
                f"exact sampling unavailable: {e}"
            ) from e
        logw = model.row_pattern_suffstats()[:, : model.dim] @ theta
        logw -= logw.max()
        w = np.exp(logw)
        probs = w / w.sum()
        idx = rng.choice(len(probs), size=model.n, p=probs)
        return model.row_patterns()[idx].astype(np.int64)
    try:
        probs = model.enumerate_distribution(theta, cap)
    except IntractableSizeError as e:
        raise ExactSamplingUnavailableError(f"exact sampling unavailable: {e}") from e
    idx = int(np.searchsorted(np.cumsum(probs), rng.random()))
    idx = min(idx, len(probs) - 1)
    return model.state_from_index(idx)
