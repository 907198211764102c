"""Priors over theta with log-densities, gradients, and Hessians.

Gradients and Hessians feed the curvature diagnostic; both are exact for
the prior families used here.
"""

from __future__ import annotations

import numpy as np


class UniformBoxPrior:
    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("need lo < hi per coordinate")
        self.dim = len(self.lo)
        self._log_vol = float(np.sum(np.log(self.hi - self.lo)))

    def in_support(self, theta) -> bool:
        return bool(np.all(theta > self.lo) and np.all(theta < self.hi))

    def log_density(self, theta) -> float:
        return -self._log_vol if self.in_support(theta) else -np.inf

    def grad_log_density(self, theta) -> np.ndarray:
        return np.zeros(self.dim)

    def hess_log_density(self, theta) -> np.ndarray:
        return np.zeros((self.dim, self.dim))

    def sample(self, rng) -> np.ndarray:
        return rng.uniform(self.lo, self.hi)


class IndependentNormalPrior:
    def __init__(self, mean, scale):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.scale = np.atleast_1d(np.asarray(scale, dtype=float))
        if self.scale.shape != self.mean.shape or np.any(self.scale <= 0):
            raise ValueError("scales must be positive and match the mean")
        self.dim = len(self.mean)

    def in_support(self, theta) -> bool:
        return True

    def log_density(self, theta) -> float:
        z = (np.asarray(theta) - self.mean) / self.scale
        return float(-0.5 * z @ z - np.sum(np.log(self.scale)) - 0.5 * self.dim * np.log(2 * np.pi))

    def grad_log_density(self, theta) -> np.ndarray:
        return -(np.asarray(theta) - self.mean) / self.scale**2

    def hess_log_density(self, theta) -> np.ndarray:
        return np.diag(-1.0 / self.scale**2)

    def sample(self, rng) -> np.ndarray:
        return self.mean + self.scale * rng.standard_normal(self.dim)
