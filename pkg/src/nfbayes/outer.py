"""Posterior samplers over theta: exchange, DMH, ABC-MCMC, and the chain driver.

All three step kernels share the same skeleton: propose theta*, obtain an
auxiliary draw from f(.|theta*), and accept with a ratio in which every
c(.) factor has cancelled.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .inner import (
    ExactSamplingUnavailableError,
    InnerSamplerConfig,
    exact_sample,
    run_cycles,
)
from .models import ENUM_CAP_DEFAULT, IntractableSizeError, Model


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------


@dataclass
class Trace:
    samples: np.ndarray  # iterations x k, row per stored iteration
    columns: list
    accepted: int = 0
    sampler: str = ""
    tuning: dict = field(default_factory=dict)
    seed: int | None = None
    wall_time_s: float = 0.0
    warnings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.size == 0:
            self.samples = self.samples.reshape(0, len(self.columns))
        if self.samples.shape[1] != len(self.columns):
            raise ValueError("column names do not match sample width")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.n if self.n else 0.0

    def theta_matrix(self) -> np.ndarray:
        cols = [i for i, c in enumerate(self.columns) if c.startswith("theta_")]
        return self.samples[:, cols]

    def meta(self) -> dict:
        return {
            "sampler": self.sampler,
            "tuning": self.tuning,
            "seed": self.seed,
            "iterations": self.n,
            "acceptance_rate": self.acceptance_rate,
            "wall_time_s": self.wall_time_s,
            "warnings": self.warnings,
            "columns": list(self.columns),
        }

    def save(self, path) -> None:
        path = str(path)
        with open(path, "w") as fh:
            fh.write("iter," + ",".join(self.columns) + "\n")
            for i, row in enumerate(self.samples):
                fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")
        with open(path + ".meta.json", "w") as fh:
            json.dump(self.meta(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "Trace":
        path = str(path)
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header[0] != "iter":
                raise ValueError(f"{path}: expected 'iter' as first column")
            columns = header[1:]
            rows = []
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(columns) + 1:
                    raise ValueError(f"{path}: malformed row at line {lineno}")
                rows.append([float(v) for v in parts[1:]])
        samples = np.array(rows, dtype=float).reshape(len(rows), len(columns))
        trace = cls(samples=samples, columns=columns)
        try:
            with open(path + ".meta.json") as fh:
                meta = json.load(fh)
            trace.sampler = meta.get("sampler", "")
            trace.tuning = meta.get("tuning", {})
            trace.seed = meta.get("seed")
            trace.accepted = int(
                round(meta.get("acceptance_rate", 0.0) * max(len(rows), 1))
            )
            trace.wall_time_s = meta.get("wall_time_s", 0.0)
            trace.warnings = meta.get("warnings", {})
        except FileNotFoundError:
            pass
        return trace


def theta_columns(p: int) -> list:
    return [f"theta_{i + 1}" for i in range(p)]


# ---------------------------------------------------------------------------
# Proposal
# ---------------------------------------------------------------------------


class RandomWalkProposal:
    """Gaussian random walk; optionally adapts its covariance during burn-in.

    Adaptation rescales the empirical covariance of the history by
    2.38^2/p and freezes at `adapt_until`, so the post-burn-in chain is
    time-homogeneous (the batch-means theory in the diagnostics needs this).
    """

    def __init__(self, cov, adapt: bool = False, adapt_until: int = 0, window: int = 1000):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        self.dim = cov.shape[0]
        self.adapt = adapt
        self.adapt_until = adapt_until
        self.window = window
        self._history = []
        self._set_cov(cov)

    def _set_cov(self, cov):
        jitter = 0.0
        for _ in range(8):
            try:
                self._chol = np.linalg.cholesky(cov + jitter * np.eye(self.dim))
                self.cov = cov + jitter * np.eye(self.dim)
                return
            except np.linalg.LinAlgError:
                jitter = max(jitter * 10, 1e-10)
        raise ValueError("proposal covariance is not positive definite")

    def propose(self, theta, rng) -> np.ndarray:
        return theta + self._chol @ rng.standard_normal(self.dim)

    def log_q_ratio(self, theta, theta_star) -> float:
        return 0.0  # symmetric

    def observe(self, theta, iteration: int) -> None:
        if not self.adapt or iteration >= self.adapt_until:
            return
        self._history.append(np.array(theta))
        if iteration > 0 and iteration % self.window == 0 and len(self._history) > 2 * self.dim:
            emp = np.cov(np.array(self._history).T).reshape(self.dim, self.dim)
            self._set_cov(2.38**2 / self.dim * emp + 1e-9 * np.eye(self.dim))


# ---------------------------------------------------------------------------
# Step kernels
# ---------------------------------------------------------------------------


def _mh_accept(log_alpha: float, rng) -> bool:
    return log_alpha >= 0 or np.log(rng.random()) < log_alpha


class ExchangeKernel:
    """Exchange algorithm: auxiliary draw is exact, sampler asymptotically exact."""

    name = "exchange"

    def __init__(self, model: Model, data, prior, proposal, cap: int = ENUM_CAP_DEFAULT):
        self.model = model
        self.prior = prior
        self.proposal = proposal
        self.cap = cap
        self.data_stat = model.suffstat(data)
        try:
            model.check_enumerable(cap)
        except IntractableSizeError as e:
            raise ExactSamplingUnavailableError(
                f"exchange needs exact draws, but {e}; use DMH instead"
            ) from e

    def step(self, theta, rng):
        theta_star = self.proposal.propose(theta, rng)
        lp_star = self.prior.log_density(theta_star)
        if lp_star == -np.inf:
            return theta, False
        aux = exact_sample(self.model, theta_star, rng, self.cap)
        aux_stat = self.model.suffstat(aux)
        log_alpha = (
            lp_star
            - self.prior.log_density(theta)
            + (theta_star - theta) @ self.data_stat
            + (theta - theta_star) @ aux_stat
            + self.proposal.log_q_ratio(theta, theta_star)
        )
        if _mh_accept(log_alpha, rng):
            return theta_star, True
        return theta, False


class DmhKernel:
    """Double Metropolis-Hastings: inner chain of m cycles replaces the exact draw.

    Asymptotically inexact for finite m; the inner chain starts at the
    observed data.
    """

    name = "dmh"

    def __init__(self, model: Model, data, prior, proposal, inner: InnerSamplerConfig):
        if inner.cycles < 1:
            raise ValueError("DMH needs at least one inner cycle")
        self.model = model
        self.prior = prior
        self.proposal = proposal
        self.inner = inner
        self.data = np.array(data, copy=True)
        self.data_stat = model.suffstat(data)

    def step(self, theta, rng):
        theta_star = self.proposal.propose(theta, rng)
        lp_star = self.prior.log_density(theta_star)
        if lp_star == -np.inf:
            return theta, False
        state = np.array(self.data, copy=True)
        run_cycles(self.model, state, theta_star, self.inner.kind, self.inner.cycles, rng)
        aux_stat = self.model.suffstat(state)
        log_alpha = (
            lp_star
            - self.prior.log_density(theta)
            + (theta_star - theta) @ self.data_stat
            + (theta - theta_star) @ aux_stat
            + self.proposal.log_q_ratio(theta, theta_star)
        )
        if _mh_accept(log_alpha, rng):
            return theta_star, True
        return theta, False


class AbcMcmcKernel:
    """ABC-MCMC on sufficient statistics with an L1 distance and threshold eps."""

    name = "abc-mcmc"

    def __init__(
        self,
        model: Model,
        data,
        prior,
        proposal,
        epsilon: float,
        inner: InnerSamplerConfig,
        distance_scale=None,
    ):
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        self.model = model
        self.prior = prior
        self.proposal = proposal
        self.epsilon = epsilon
        self.inner = inner
        self.data = np.array(data, copy=True)
        self.data_stat = model.suffstat(data)
        self.distance_scale = (
            np.ones(model.dim) if distance_scale is None else np.asarray(distance_scale, float)
        )

    def distance(self, stat) -> float:
        return float(np.sum(np.abs(stat - self.data_stat) / self.distance_scale))

    def step(self, theta, rng):
        theta_star = self.proposal.propose(theta, rng)
        lp_star = self.prior.log_density(theta_star)
        if lp_star == -np.inf:
            return theta, False
        if np.isfinite(self.epsilon):
            state = np.array(self.data, copy=True)
            run_cycles(self.model, state, theta_star, self.inner.kind, self.inner.cycles, rng)
            if self.distance(self.model.suffstat(state)) >= self.epsilon:
                return theta, False
        log_alpha = (
            lp_star
            - self.prior.log_density(theta)
            + self.proposal.log_q_ratio(theta, theta_star)
        )
        if _mh_accept(log_alpha, rng):
            return theta_star, True
        return theta, False


class PriorKernel:
    """Plain MH on the prior alone; useful as a distributional reference."""

    name = "prior"

    def __init__(self, prior, proposal):
        self.prior = prior
        self.proposal = proposal

    def step(self, theta, rng):
        theta_star = self.proposal.propose(theta, rng)
        log_alpha = (
            self.prior.log_density(theta_star)
            - self.prior.log_density(theta)
            + self.proposal.log_q_ratio(theta, theta_star)
        )
        if _mh_accept(log_alpha, rng):
            return theta_star, True
        return theta, False


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def run_chain(
    kernel,
    iterations: int,
    init_theta,
    rng,
    seed: int | None = None,
    tuning: dict | None = None,
    out_path=None,
    flush_every: int = 10_000,
) -> Trace:
    """Loop a step kernel for `iterations` steps, recording every state.

    With `out_path`, rows are appended incrementally so a partial run
    leaves a valid (truncated) CSV behind.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    theta = np.atleast_1d(np.asarray(init_theta, dtype=float)).copy()
    p = len(theta)
    columns = theta_columns(p)
    samples = np.empty((iterations, p))
    accepted = 0
    proposal = getattr(kernel, "proposal", None)
    t0 = time.perf_counter()
    fh = None
    try:
        if out_path is not None:
            fh = open(str(out_path), "w")
            fh.write("iter," + ",".join(columns) + "\n")
        for i in range(iterations):
            if proposal is not None:
                proposal.observe(theta, i)
            theta, acc = kernel.step(theta, rng)
            accepted += acc
            samples[i] = theta
            if fh is not None:
                fh.write(str(i) + "," + ",".join(repr(float(v)) for v in theta) + "\n")
                if (i + 1) % flush_every == 0:
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()
    trace = Trace(
        samples=samples,
        columns=columns,
        accepted=accepted,
        sampler=getattr(kernel, "name", type(kernel).__name__),
        tuning=dict(tuning or {}),
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
    )
    if out_path is not None:
        with open(str(out_path) + ".meta.json", "w") as mfh:
            json.dump(trace.meta(), mfh, indent=2)
    return trace
