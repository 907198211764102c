"""Command-line entry points: simulate datasets, run tuning-grid
experiments, compute ACD for an existing trace, and summarize traces.

Exit codes: 0 success, 1 config error, 2 runtime failure, 3 partial
completion (some grid entries failed, the rest are valid).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .diagnostics import acd
from .harness import (
    ConfigError,
    build_model,
    build_prior,
    load_config,
    load_data,
    posterior_summary,
    run_experiment,
    simulate_dataset,
)
from .outer import Trace


def _add_common(parser):
    parser.add_argument("--config", required=True, help="YAML experiment config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--workers", type=int, default=None, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfbayes",
        description="Bayesian inference for models with intractable normalizing functions",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    sim = sub.add_parser("simulate", help="simulate a dataset from a model config")
    _add_common(sim)
    sim.add_argument("--theta", type=float, nargs="+", help="override config init theta")
    sim.add_argument("--cycles", type=int, default=None, help="inner-sampler cycles")

    run = sub.add_parser("run", help="run the configured tuning-grid experiment")
    _add_common(run)

    acd_p = sub.add_parser("acd", help="ACD report for an existing trace")
    _add_common(acd_p)
    acd_p.add_argument("--trace", required=True, help="trace CSV to diagnose")
    acd_p.add_argument("--burnin", type=int, default=0)
    acd_p.add_argument("--thinning", type=int, default=1)

    summ = sub.add_parser("summarize", help="posterior summary for a trace")
    summ.add_argument("--trace", required=True, help="trace CSV to summarize")
    summ.add_argument("--out", required=True, help="output directory")
    summ.add_argument("--burnin", type=int, default=0)
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    theta = args.theta if args.theta is not None else cfg.sampler.get("init")
    if theta is None:
        raise ConfigError("simulate needs --theta or sampler.init in the config")
    cycles = args.cycles if args.cycles is not None else cfg.iterations
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "dataset.txt"
    simulate_dataset(
        cfg.model,
        np.asarray(theta, dtype=float),
        cycles,
        cfg.seed,
        path,
        inner=cfg.sampler.get("inner", "gibbs"),
    )
    print(f"wrote {path}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    code = run_experiment(cfg, args.out, workers=args.workers)
    print(f"experiment directory: {args.out} (exit {code})")
    return code


def _cmd_acd(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    model = build_model(cfg.model)
    data = load_data(cfg.model, cfg.data)
    prior = build_prior(cfg.prior, model.dim)
    trace = Trace.load(args.trace)
    thetas = trace.theta_matrix()[args.burnin :: args.thinning]
    pool_kwargs = None
    if model.state_space_size() > 2**20:
        pool_kwargs = {
            "exact": False,
            "spacing": int(cfg.acd.get("spacing", 5)),
            "init_state": data,
            "kind": cfg.sampler.get("inner", "gibbs"),
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
        refs=int(cfg.acd.get("refs", 1)),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "acd.json")
    status = "pass" if report.passed else "fail"
    print(f"ACD mean {report.mean:.3f} threshold {report.threshold:.2f} -> {status}")
    return 0


def _cmd_summarize(args) -> int:
    path = posterior_summary(args.trace, args.out, burnin=args.burnin)
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "run": _cmd_run,
        "acd": _cmd_acd,
        "summarize": _cmd_summarize,
    }
    try:
        return handlers[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
