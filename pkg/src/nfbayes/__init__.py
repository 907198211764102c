"""Bayesian inference for models with intractable normalizing functions.

Samplers (exchange, double MH, ABC-MCMC, adaptive normalizer approximation,
GP likelihood emulation, spike-and-slab DMH) plus the approximate curvature
diagnostic for assessing sample quality of asymptotically inexact algorithms.
"""

from .models import ErgmModel, IsingNetworkModel, PottsModel
from .rng import make_rng

__all__ = ["PottsModel", "ErgmModel", "IsingNetworkModel", "make_rng"]
