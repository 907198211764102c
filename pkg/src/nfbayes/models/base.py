"""Shared model interface: exponential-family models f(x|theta) = exp(theta'S(x))/c(theta)."""

from __future__ import annotations

import numpy as np

ENUM_CAP_DEFAULT = 2**20


class IntractableSizeError(Exception):
    """State space too large for exact enumeration — the whole point of the problem."""


class DimensionMismatchError(ValueError):
    """Parameter/state dimensions do not match the model."""


class Model:
    """Base class for the three exponential-family models.

    Subclasses define the state representation (a numpy array), the
    sufficient statistic S(x), local change statistics, and enumeration
    of the state space for tiny instances.
    """

    dim: int  # parameter dimension p

    # -- statistics ---------------------------------------------------------

    def suffstat(self, state) -> np.ndarray:
        raise NotImplementedError

    def change_stat(self, state, site, new_value) -> np.ndarray:
        """S(x') - S(x) for a single-site/edge modification, without applying it."""
        raise NotImplementedError

    def apply_change(self, state, site, new_value) -> None:
        """Apply the modification in place."""
        raise NotImplementedError

    # -- enumeration --------------------------------------------------------

    def state_space_size(self) -> int:
        raise NotImplementedError

    def enumerate_suffstats(self, cap: int = ENUM_CAP_DEFAULT) -> np.ndarray:
        """All S(x) values, one row per state, in a fixed enumeration order."""
        raise NotImplementedError

    def state_from_index(self, idx: int):
        """Decode the state at position `idx` of the enumeration order."""
        raise NotImplementedError

    def check_enumerable(self, cap: int = ENUM_CAP_DEFAULT) -> None:
        size = self.state_space_size()
        if size > cap:
            raise IntractableSizeError(
                f"state space has {size} configurations, exceeding the cap of {cap}: "
                "exact enumeration is intractable at this size"
            )

    # -- densities ----------------------------------------------------------

    def check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            raise DimensionMismatchError(
                f"theta has shape {theta.shape}, model expects ({self.dim},)"
            )
        return theta

    def log_h(self, state, theta) -> float:
        """Unnormalized log-density theta'S(x)."""
        theta = self.check_theta(theta)
        return float(theta @ self.suffstat(state))

    def enumerate_log_normalizer(self, theta, cap: int = ENUM_CAP_DEFAULT) -> float:
        """Exact log c(theta) by full enumeration. Errors beyond the cap."""
        theta = self.check_theta(theta)
        self.check_enumerable(cap)
        stats = self.enumerate_suffstats(cap)
        from scipy.special import logsumexp

        return float(logsumexp(stats @ theta))

    def enumerate_distribution(self, theta, cap: int = ENUM_CAP_DEFAULT) -> np.ndarray:
        """Exact probabilities over the enumerated state space."""
        theta = self.check_theta(theta)
        self.check_enumerable(cap)
        logw = self.enumerate_suffstats(cap) @ theta
        logw -= logw.max()
        w = np.exp(logw)
        return w / w.sum()


def decode_mixed_radix(idx: int, n_digits: int, base: int) -> np.ndarray:
    """Digits of `idx` in the given base, least-significant first."""
    digits = np.empty(n_digits, dtype=np.int64)
    for k in range(n_digits):
        digits[k] = idx % base
        idx //= base
    return digits


def all_digit_arrays(n_digits: int, base: int) -> np.ndarray:
    """(base**n_digits, n_digits) array of all digit combinations."""
    n = base**n_digits
    idx = np.arange(n, dtype=np.int64)
    cols = [(idx // base**k) % base for k in range(n_digits)]
    return np.stack(cols, axis=1)
