"""Experiment runner: config parsing, dataset simulation, tuning-grid
orchestration with parallel workers, ACD per grid entry, and summaries."""

from __future__ import annotations

import csv
import json
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import gaussian_kde

from .alr import alr_run
from .diagnostics import acd
from .inner import GIBBS, SWENDSEN_WANG, InnerSamplerConfig, run_cycles
from .likem import likem_run, select_particles
from .models import (
    ErgmModel,
    IsingNetworkModel,
    Model,
    PottsModel,
    read_edge_list,
    read_item_responses,
    read_lattice,
    write_edge_list,
    write_item_responses,
    write_lattice,
)
from .outer import (
    AbcMcmcKernel,
    DmhKernel,
    ExchangeKernel,
    RandomWalkProposal,
    Trace,
    run_chain,
)
from .priors import IndependentNormalPrior, UniformBoxPrior
from .rng import make_rng
from .spikeslab import spike_slab_dmh_run


class ConfigError(ValueError):
    """Invalid or malformed experiment configuration."""


SAMPLER_KINDS = ("exchange", "dmh", "abc", "alr", "likem", "spike_slab")
GRID_PARAMS = {
    "exchange": None,
    "dmh": "m",
    "abc": "eps",
    "alr": "d",
    "likem": "d",
    "spike_slab": "m",
}

SUMMARY_COLUMNS = [
    "tuning",
    "mean_acd",
    "acd_lo",
    "acd_hi",
    "pass",
    "wall_time_s",
    "status",
]


@dataclass
class ExperimentConfig:
    model: dict
    data: str
    prior: dict
    sampler: dict
    iterations: int
    seed: int
    burnin: int = 0
    thinning: int = 1
    acd: dict = field(default_factory=dict)
    output_dir: str | None = None
    workers: int | None = None

    @property
    def grid(self) -> list:
        return list(self.sampler.get("grid", [None]))


def _check_keys(section: dict, allowed: set, where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}: unknown key (allowed: {sorted(allowed)})")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}.{key}: missing required key")
    return section[key]


TOP_KEYS = {
    "model",
    "data",
    "prior",
    "sampler",
    "iterations",
    "burnin",
    "thinning",
    "acd",
    "seed",
    "output_dir",
    "workers",
}
MODEL_KEYS = {"kind", "rows", "cols", "colors", "n", "p"}
PRIOR_KEYS = {"kind", "lo", "hi", "mean", "scale"}
SAMPLER_KEYS = {
    "kind",
    "grid",
    "inner",
    "proposal_scale",
    "adapt",
    "init",
    "distance_scale",
    "pilot_iterations",
    "pilot_m",
    "grow_until",
    "prerun_iterations",
    "prerun_inner",
    "N",
    "update_hyper",
    "theta_scale",
}
ACD_KEYS = {"N", "replications", "cap", "markov", "alpha", "refs", "spacing"}


def parse_config(raw: dict, origin: str = "config") -> ExperimentConfig:
    """Validate a config mapping; unknown keys and bad values raise ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{origin}: top level must be a mapping")
    _check_keys(raw, TOP_KEYS, origin)
    model = _require(raw, "model", origin)
    _check_keys(model, MODEL_KEYS, f"{origin}.model")
    kind = _require(model, "kind", f"{origin}.model")
    if kind not in ("potts", "ergm", "ising_network"):
        raise ConfigError(f"{origin}.model.kind: unknown model kind '{kind}'")
    prior = _require(raw, "prior", origin)
    _check_keys(prior, PRIOR_KEYS, f"{origin}.prior")
    if _require(prior, "kind", f"{origin}.prior") not in ("uniform_box", "normal"):
        raise ConfigError(f"{origin}.prior.kind: must be 'uniform_box' or 'normal'")
    sampler = _require(raw, "sampler", origin)
    _check_keys(sampler, SAMPLER_KEYS, f"{origin}.sampler")
    skind = _require(sampler, "kind", f"{origin}.sampler")
    if skind not in SAMPLER_KINDS:
        raise ConfigError(f"{origin}.sampler.kind: unknown sampler '{skind}'")
    grid = sampler.get("grid")
    if skind != "exchange":
        if not isinstance(grid, list) or len(grid) == 0:
            raise ConfigError(
                f"{origin}.sampler.grid: non-empty list of "
                f"{GRID_PARAMS[skind]} values required for '{skind}'"
            )
        for i, v in enumerate(grid):
            ok = (
                isinstance(v, (int, float))
                and v > 0
                and (skind == "abc" or float(v) == int(v))
            )
            if not ok:
                raise ConfigError(
                    f"{origin}.sampler.grid[{i}]: invalid {GRID_PARAMS[skind]} "
                    f"value {v!r} for sampler '{skind}'"
                )
    acd_cfg = raw.get("acd", {})
    _check_keys(acd_cfg, ACD_KEYS, f"{origin}.acd")
    if "seed" not in raw:
        raise ConfigError(f"{origin}.seed: missing required key")
    iterations = _require(raw, "iterations", origin)
    if not isinstance(iterations, int) or iterations <= 0:
        raise ConfigError(f"{origin}.iterations: must be a positive integer")
    return ExperimentConfig(
        model=dict(model),
        data=str(_require(raw, "data", origin)),
        prior=dict(prior),
        sampler=dict(sampler),
        iterations=iterations,
        burnin=int(raw.get("burnin", 0)),
        thinning=int(raw.get("thinning", 1)),
        acd=dict(acd_cfg),
        seed=int(raw["seed"]),
        output_dir=raw.get("output_dir"),
        workers=raw.get("workers"),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, origin=str(path))


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_model(spec: dict) -> Model:
    kind = spec["kind"]
    if kind == "potts":
        return PottsModel(int(spec["rows"]), int(spec["cols"]), int(spec["colors"]))
    if kind == "ergm":
        return ErgmModel(int(spec["n"]))
    return IsingNetworkModel(int(spec["n"]), int(spec["p"]))


def load_data(spec: dict, path) -> np.ndarray:
    kind = spec["kind"]
    if kind == "potts":
        return read_lattice(path)
    if kind == "ergm":
        return read_edge_list(path, n=int(spec["n"]))
    return read_item_responses(path)


def write_data(spec: dict, state: np.ndarray, path) -> None:
    kind = spec["kind"]
    if kind == "potts":
        write_lattice(path, state)
    elif kind == "ergm":
        write_edge_list(path, state)
    else:
        write_item_responses(path, state)


def build_prior(spec: dict, dim: int):
    if spec["kind"] == "uniform_box":
        lo = np.broadcast_to(np.asarray(spec["lo"], float), (dim,))
        hi = np.broadcast_to(np.asarray(spec["hi"], float), (dim,))
        return UniformBoxPrior(lo, hi)
    mean = np.broadcast_to(np.asarray(spec.get("mean", 0.0), float), (dim,))
    scale = np.broadcast_to(np.asarray(spec.get("scale", 1.0), float), (dim,))
    return IndependentNormalPrior(mean, scale)


def _inner_config(sampler: dict, cycles: int) -> InnerSamplerConfig:
    kind = sampler.get("inner", GIBBS)
    if kind not in (GIBBS, SWENDSEN_WANG):
        raise ConfigError(f"sampler.inner: unknown inner sampler '{kind}'")
    return InnerSamplerConfig(kind, cycles)


def _proposal(cfg: ExperimentConfig, dim: int) -> RandomWalkProposal:
    scale = float(cfg.sampler.get("proposal_scale", 0.2))
    adapt = bool(cfg.sampler.get("adapt", True))
    return RandomWalkProposal(
        np.eye(dim) * scale**2,
        adapt=adapt,
        adapt_until=max(cfg.burnin, 1) if adapt else 0,
    )


def _init_theta(cfg: ExperimentConfig, prior, dim: int) -> np.ndarray:
    init = cfg.sampler.get("init")
    if init is not None:
        theta = np.atleast_1d(np.asarray(init, dtype=float))
        if theta.shape != (dim,):
            raise ConfigError(f"sampler.init: expected {dim} values")
        return theta
    rng = make_rng(cfg.seed, 999)
    return np.atleast_1d(prior.sample(rng))


def run_single_chain(
    cfg: ExperimentConfig, value, entry_index: int, out_path=None
) -> Trace:
    """One grid entry: build everything and run the configured sampler."""
    model = build_model(cfg.model)
    data = load_data(cfg.model, cfg.data)
    rng = make_rng(cfg.seed, entry_index)
    kind = cfg.sampler["kind"]

    if kind == "spike_slab":
        return spike_slab_dmh_run(
            data,
            cfg.iterations,
            rng,
            m=int(value),
            seed=cfg.seed,
            theta_scale=float(cfg.sampler.get("theta_scale", 0.1)),
            update_hyper=bool(cfg.sampler.get("update_hyper", True)),
            inner_kind=cfg.sampler.get("inner", GIBBS),
            out_path=out_path,
        )

    prior = build_prior(cfg.prior, model.dim)
    proposal = _proposal(cfg, model.dim)
    init = _init_theta(cfg, prior, model.dim)
    tuning = {GRID_PARAMS[kind]: value} if GRID_PARAMS[kind] else {}

    if kind == "exchange":
        kernel = ExchangeKernel(model, data, prior, proposal)
        return run_chain(
            kernel, cfg.iterations, init, rng, seed=cfg.seed, tuning=tuning,
            out_path=out_path,
        )
    if kind == "dmh":
        kernel = DmhKernel(model, data, prior, proposal, _inner_config(cfg.sampler, int(value)))
        return run_chain(
            kernel, cfg.iterations, init, rng, seed=cfg.seed, tuning=tuning,
            out_path=out_path,
        )
    if kind == "abc":
        inner = _inner_config(cfg.sampler, int(cfg.sampler.get("pilot_m", 50)))
        kernel = AbcMcmcKernel(
            model, data, prior, proposal, float(value), inner,
            distance_scale=cfg.sampler.get("distance_scale"),
        )
        return run_chain(
            kernel, cfg.iterations, init, rng, seed=cfg.seed, tuning=tuning,
            out_path=out_path,
        )
    if kind == "alr":
        particles = _alr_particles(cfg, model, data, prior, int(value), rng)
        trace = alr_run(
            data,
            model,
            prior,
            RandomWalkProposal(proposal.cov, adapt=False),
            particles,
            cfg.iterations,
            rng,
            seed=cfg.seed,
            inner_kind=cfg.sampler.get("inner", GIBBS),
            grow_until=int(cfg.sampler.get("grow_until", 2000)),
            init_theta=init,
        )
        if out_path is not None:
            trace.save(out_path)
        return trace
    # likem
    trace = likem_run(
        data,
        model,
        prior,
        cfg.iterations,
        rng,
        d=int(value),
        N=int(cfg.sampler.get("N", 10_000)),
        seed=cfg.seed,
        prerun_iterations=int(cfg.sampler.get("prerun_iterations", 3000)),
        prerun_inner=int(cfg.sampler.get("prerun_inner", 90)),
        inner_kind=cfg.sampler.get("inner", GIBBS),
        init_theta=init,
        out_path=out_path,
    )
    return trace


def _alr_particles(cfg, model, data, prior, d, rng):
    """Spread d particles over the posterior bulk via a short DMH pilot run."""
    pilot_iters = int(cfg.sampler.get("pilot_iterations", 2000))
    pilot_m = int(cfg.sampler.get("pilot_m", 5))
    proposal = _proposal(cfg, model.dim)
    pilot = run_chain(
        DmhKernel(model, data, prior, proposal, _inner_config(cfg.sampler, pilot_m)),
        pilot_iters,
        _init_theta(cfg, prior, model.dim),
        rng,
    )
    draws = pilot.theta_matrix()[pilot_iters // 3 :]
    return select_particles(draws, d)


# ---------------------------------------------------------------------------
# Experiment orchestration
# ---------------------------------------------------------------------------


def _entry_dir(out_dir: Path, value) -> Path:
    tag = "chain" if value is None else str(value).replace(".", "_")
    return out_dir / f"entry_{tag}"


def _run_entry_worker(cfg: ExperimentConfig, value, entry_index: int, out_dir: str):
    """Worker body: run one grid entry, persist trace + ACD, return summary row."""
    entry_dir = Path(out_dir)
    entry_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    trace = run_single_chain(cfg, value, entry_index, out_path=entry_dir / "trace.csv")
    trace.save(entry_dir / "trace.csv")

    model = build_model(cfg.model)
    data = load_data(cfg.model, cfg.data)
    prior = build_prior(cfg.prior, model.dim)
    thetas = trace.theta_matrix()[cfg.burnin :: cfg.thinning]
    enumerable = model.state_space_size() <= 2**20
    pool_kwargs = None
    if not enumerable:
        pool_kwargs = {
            "exact": False,
            "spacing": int(cfg.acd.get("spacing", 5)),
            "init_state": data,
            "kind": cfg.sampler.get("inner", GIBBS),
        }
    report = acd(
        thetas,
        model,
        model.suffstat(data),
        prior,
        N=int(cfg.acd.get("N", 5000)),
        replications=int(cfg.acd.get("replications", 30)),
        seed=cfg.seed,
        markov=bool(cfg.acd.get("markov", True)),
        pool_kwargs=pool_kwargs,
        dim_cap=int(cfg.acd.get("cap", 400)),
        alpha=float(cfg.acd.get("alpha", 0.01)),
        stream=(entry_index,),
        refs=int(cfg.acd.get("refs", 1)),
    )
    report.save(entry_dir / "acd.json")
    lo, hi = report.interval
    return {
        "tuning": "" if value is None else value,
        "mean_acd": report.mean,
        "acd_lo": lo,
        "acd_hi": hi,
        "pass": report.passed,
        "wall_time_s": time.perf_counter() - t0,
        "status": "ok",
    }


def write_summary(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def run_experiment(cfg: ExperimentConfig, out_dir, workers: int | None = None) -> int:
    """Run every grid entry (concurrently), write traces, ACD reports, and
    summary.csv.  Returns 0 on success, 3 if some entries failed (the rest
    remain valid and the summary is marked partial)."""
    grid = cfg.grid
    if len(grid) == 0:
        raise ConfigError("sampler.grid: empty grid")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w") as fh:
        json.dump(cfg.__dict__, fh, indent=2, default=str)
    if workers is None:
        workers = cfg.workers
    rows = []
    failures = 0
    jobs = [
        (value, idx, str(_entry_dir(out_dir, value))) for idx, value in enumerate(grid)
    ]
    if workers is not None and workers <= 1:
        results = [_run_entry_guarded(cfg, *job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_entry_guarded, cfg, *job) for job in jobs]
            results = [f.result() for f in futures]
    for row in results:
        failures += row["status"] != "ok"
        rows.append(row)
    write_summary(rows, out_dir / "summary.csv")
    if failures:
        (out_dir / "PARTIAL").write_text(f"{failures} of {len(grid)} entries failed\n")
        return 3
    return 0


def _run_entry_guarded(cfg, value, idx, entry_dir):
    try:
        return _run_entry_worker(cfg, value, idx, entry_dir)
    except Exception:
        Path(entry_dir).mkdir(parents=True, exist_ok=True)
        (Path(entry_dir) / "error.txt").write_text(traceback.format_exc())
        return {
            "tuning": "" if value is None else value,
            "mean_acd": "",
            "acd_lo": "",
            "acd_hi": "",
            "pass": "",
            "wall_time_s": "",
            "status": "failed",
        }


# ---------------------------------------------------------------------------
# Dataset simulation and posterior summaries
# ---------------------------------------------------------------------------


def simulate_dataset(
    model_spec: dict,
    theta,
    cycles: int,
    seed: int,
    out_path,
    inner: str = GIBBS,
) -> np.ndarray:
    """Simulate a dataset at theta by `cycles` inner-sampler cycles and write
    it in the model's ingestion format.  Deterministic per seed."""
    model = build_model(model_spec)
    rng = make_rng(seed)
    state = model.random_state(rng)
    run_cycles(model, state, np.atleast_1d(np.asarray(theta, float)), inner, cycles, rng)
    write_data(model_spec, state, out_path)
    return state


def posterior_summary(trace_path, out_dir, burnin: int = 0, grid_size: int = 100):
    """Per-coordinate summary CSV; for 2-parameter traces, also a kernel
    density estimate on a grid_size x grid_size grid."""
    trace = Trace.load(trace_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = trace.samples[burnin:]
    with open(out_dir / "posterior_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column", "mean", "sd", "p2.5", "p50", "p97.5"])
        for j, col in enumerate(trace.columns):
            x = samples[:, j]
            q = np.percentile(x, [2.5, 50, 97.5])
            writer.writerow([col, np.mean(x), np.std(x, ddof=1) if len(x) > 1 else 0.0,
                             q[0], q[1], q[2]])
    theta = trace.theta_matrix()[burnin:]
    if theta.shape[1] == 2:
        _write_density_grid(theta, out_dir / "density_grid.csv", grid_size)
    return out_dir / "posterior_summary.csv"


def _write_density_grid(theta, path, grid_size: int) -> None:
    lo = theta.min(axis=0)
    hi = theta.max(axis=0)
    pad = 0.05 * np.where(hi > lo, hi - lo, 1.0)
    xs = np.linspace(lo[0] - pad[0], hi[0] + pad[0], grid_size)
    ys = np.linspace(lo[1] - pad[1], hi[1] + pad[1], grid_size)
    try:
        kde = gaussian_kde(theta.T)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        dens = kde(np.vstack([gx.ravel(), gy.ravel()])).reshape(grid_size, grid_size)
    except np.linalg.LinAlgError:
        dens = np.zeros((grid_size, grid_size))  # degenerate trace
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_1", "theta_2", "density"])
        for i in range(grid_size):
            for j in range(grid_size):
                writer.writerow([repr(float(xs[i])), repr(float(ys[j])), repr(float(dens[i, j]))])
