"""Gaussian-process interpolation of estimated log-likelihood values.

Anisotropic squared-exponential kernel with fixed per-point noise
variances (the delta-method variances of the telescoped SNIS estimates).
Hyperparameters maximize the marginal likelihood from multiple restarts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize

BASE_JITTER = 1e-12
MAX_JITTER = 1e-4


class GpFitError(Exception):
    pass


def _sq_dists(X1, X2, length_scales):
    a = X1 / length_scales
    b = X2 / length_scales
    return (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )


@dataclass
class GpSurrogate:
    X: np.ndarray  # d x p training inputs
    y: np.ndarray  # d training targets
    noise_var: np.ndarray  # d per-point noise variances
    signal_var: float
    length_scales: np.ndarray
    mean_const: float
    jitter: float
    _alpha: np.ndarray = None
    _cho: tuple = None

    def __post_init__(self):
        K = self.signal_var * np.exp(-0.5 * _sq_dists(self.X, self.X, self.length_scales))
        K[np.diag_indices_from(K)] += self.noise_var + self.jitter
        self._cho = cho_factor(K, lower=True)
        self._alpha = cho_solve(self._cho, self.y - self.mean_const)

    def predict(self, Xs):
        """Posterior mean and variance at new inputs."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        Ks = self.signal_var * np.exp(-0.5 * _sq_dists(Xs, self.X, self.length_scales))
        mean = self.mean_const + Ks @ self._alpha
        v = cho_solve(self._cho, Ks.T)
        var = np.maximum(self.signal_var - np.sum(Ks * v.T, axis=1), 0.0)
        return mean, var

    def save(self, path) -> None:
        with open(str(path), "w") as fh:
            json.dump(
                {
                    "particles": self.X.tolist(),
                    "values": self.y.tolist(),
                    "noise_var": self.noise_var.tolist(),
                    "signal_var": self.signal_var,
                    "length_scales": self.length_scales.tolist(),
                    "mean_const": self.mean_const,
                    "jitter": self.jitter,
                },
                fh,
                indent=2,
            )

    @classmethod
    def load(cls, path) -> "GpSurrogate":
        with open(str(path)) as fh:
            d = json.load(fh)
        return cls(
            X=np.array(d["particles"], dtype=float),
            y=np.array(d["values"], dtype=float),
            noise_var=np.array(d["noise_var"], dtype=float),
            signal_var=float(d["signal_var"]),
            length_scales=np.array(d["length_scales"], dtype=float),
            mean_const=float(d["mean_const"]),
            jitter=float(d["jitter"]),
        )


def _neg_log_marginal(log_params, X, yc, noise_var):
    d, p = X.shape
    signal_var = np.exp(log_params[0])
    ls = np.exp(log_params[1:])
    K = signal_var * np.exp(-0.5 * _sq_dists(X, X, ls))
    K[np.diag_indices_from(K)] += noise_var + BASE_JITTER
    try:
        cho = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e12
    alpha = cho_solve(cho, yc)
    logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
    return 0.5 * (yc @ alpha + logdet + d * np.log(2 * np.pi))


def gp_fit(particles, values, noise_var=None, restarts: int = 5, rng=None) -> GpSurrogate:
    """Fit the surrogate; per-point noise is fixed to the provided variances."""
    X = np.atleast_2d(np.asarray(particles, dtype=float))
    y = np.asarray(values, dtype=float)
    d, p = X.shape
    if d < 2:
        raise GpFitError("need at least 2 particles to fit")
    noise_var = np.zeros(d) if noise_var is None else np.asarray(noise_var, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    mean_const = float(y.mean())
    yc = y - mean_const
    yvar = float(yc @ yc / d)
    span = X.max(axis=0) - X.min(axis=0)
    span[span == 0] = 1.0

    if yvar == 0.0:
        # constant targets: flat posterior mean everywhere
        return GpSurrogate(
            X=X,
            y=y,
            noise_var=noise_var,
            signal_var=1e-12,
            length_scales=span.copy(),
            mean_const=mean_const,
            jitter=BASE_JITTER,
        )

    bounds = [(np.log(yvar) - 14.0, np.log(yvar) + 14.0)] + [
        (np.log(1e-3 * s), np.log(1e3 * s)) for s in span
    ]
    best = None
    for r in range(restarts):
        if r == 0:
            x0 = np.concatenate([[np.log(yvar)], np.log(span)])
        else:
            x0 = np.array([rng.uniform(lo, hi) for lo, hi in bounds])
        res = minimize(
            _neg_log_marginal,
            x0,
            args=(X, yc, noise_var),
            method="L-BFGS-B",
            bounds=bounds,
        )
        if best is None or res.fun < best.fun:
            best = res
    signal_var = float(np.exp(best.x[0]))
    ls = np.exp(best.x[1:])
    jitter = BASE_JITTER
    while jitter <= MAX_JITTER:
        try:
            return GpSurrogate(
                X=X,
                y=y,
                noise_var=noise_var,
                signal_var=signal_var,
                length_scales=ls,
                mean_const=mean_const,
                jitter=jitter,
            )
        except np.linalg.LinAlgError:
            jitter *= 10
    raise GpFitError("kernel matrix not positive definite even at max jitter")
