"""End-to-end acceptance suite.

Each test exercises one headline guarantee at its stated tolerance and
prints a single PASS/FAIL line (run with -s to see them).  Oracle values
are either computed inline from exact enumeration/quadrature or were
frozen from an independent brute-force quadrature run (noted where used).
"""

import json
import time

import numpy as np
from scipy.stats import chi2

from conftest import DATA, ks_distance, quadrature_posterior
from nfbayes.alr import alr_run
from nfbayes.diagnostics import acd
from nfbayes.emulation import build_pool, snis_moments
from nfbayes.gp import gp_fit
from nfbayes.harness import parse_config, run_experiment
from nfbayes.inner import InnerSamplerConfig
from nfbayes.likem import likem_run, select_particles
from nfbayes.models import ErgmModel, PottsModel
from nfbayes.models.ergm import GWESP_DECAY
from nfbayes.outer import (
    AbcMcmcKernel,
    DmhKernel,
    ExchangeKernel,
    RandomWalkProposal,
    run_chain,
)
from nfbayes.priors import IndependentNormalPrior, UniformBoxPrior
from nfbayes.rng import make_rng

DATA_2X2 = np.array([[1, 1], [2, 1]])


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f"  [{detail}]"
    print(line)


def _testbed():
    model = PottsModel(2, 2, 2)
    prior = UniformBoxPrior([0.0], [3.0])
    stat = float(model.suffstat(DATA_2X2)[0])
    grid, weights = quadrature_posterior(model, stat, 0.0, 3.0)
    return model, prior, grid, weights


def test_exchange_matches_quadrature_posterior():
    model, prior, grid, weights = _testbed()
    t0 = time.perf_counter()
    trace = run_chain(
        ExchangeKernel(model, DATA_2X2, prior, RandomWalkProposal(np.eye(1) * 0.5**2)),
        200_000,
        np.array([1.0]),
        make_rng(201),
    )
    elapsed = time.perf_counter() - t0
    ks = ks_distance(trace.theta_matrix()[2000:, 0], grid, weights)
    ok = ks < 0.03 and elapsed < 60
    _report("exchange KS to quadrature < 0.03 in < 60 s", ok, f"ks={ks:.4f}, {elapsed:.0f}s")
    assert ks < 0.03
    assert elapsed < 60


def test_dmh_error_decreases_with_inner_length():
    model, prior, grid, weights = _testbed()
    t0 = time.perf_counter()
    mean_ks = {}
    for m in (1, 10, 200):
        vals = []
        for seed in range(10):
            trace = run_chain(
                DmhKernel(
                    model,
                    DATA_2X2,
                    prior,
                    RandomWalkProposal(np.eye(1) * 0.5**2),
                    InnerSamplerConfig("gibbs", m),
                ),
                30_000,
                np.array([1.0]),
                make_rng(202, m, seed),
            )
            vals.append(ks_distance(trace.theta_matrix()[2000:, 0], grid, weights))
        mean_ks[m] = float(np.mean(vals))
    elapsed = time.perf_counter() - t0
    ordered = mean_ks[1] >= mean_ks[10] >= mean_ks[200]
    ok = ordered and mean_ks[200] < 0.03 and elapsed < 300
    _report(
        "DMH KS non-increasing in m, m=200 KS < 0.03 in < 5 min",
        ok,
        f"ks={mean_ks[1]:.4f}/{mean_ks[10]:.4f}/{mean_ks[200]:.4f}, {elapsed:.0f}s",
    )
    assert ordered
    assert mean_ks[200] < 0.03
    assert elapsed < 300


def test_abc_prior_limit():
    model, prior, _, _ = _testbed()
    t0 = time.perf_counter()
    trace = run_chain(
        AbcMcmcKernel(
            model,
            DATA_2X2,
            prior,
            RandomWalkProposal(np.eye(1) * 1.0),
            np.inf,
            InnerSamplerConfig("gibbs", 1),
        ),
        100_000,
        np.array([1.5]),
        make_rng(203),
    )
    elapsed = time.perf_counter() - t0
    s = np.sort(trace.theta_matrix()[:, 0])
    ks = float(np.abs(s / 3.0 - np.arange(1, len(s) + 1) / len(s)).max())
    ok = ks < 0.02 and elapsed < 60
    _report("ABC eps=inf matches the prior, KS < 0.02", ok, f"ks={ks:.4f}, {elapsed:.0f}s")
    assert ks < 0.02
    assert elapsed < 60


def test_snis_matches_enumerated_normalizer_ratio():
    model = PottsModel(2, 2, 2)
    pool = build_pool(model, [0.5], 100_000, rng=make_rng(204), exact=True)
    est = snis_moments(pool, [1.0]).log_ratio
    exact = model.enumerate_log_normalizer([1.0]) - model.enumerate_log_normalizer([0.5])
    err = abs(est - exact)
    _report("SNIS log c(1.0)/c(0.5) within 0.01 of enumeration", err < 0.01, f"err={err:.5f}")
    assert err < 0.01


def test_acd_null_calibration():
    model = PottsModel(2, 2, 2)
    prior = IndependentNormalPrior([1.0], [1.0])
    data_stat = np.array([3.0])
    grid = np.linspace(-4.0, 6.0, 4001)
    logz = np.array([model.enumerate_log_normalizer([g]) for g in grid])
    logpost = np.array([prior.log_density([g]) for g in grid]) + grid * 3.0 - logz
    w = np.exp(logpost - logpost.max())
    w /= w.sum()
    draws = make_rng(205).choice(grid, size=100_000, p=w)[:, None]
    t0 = time.perf_counter()
    report = acd(
        draws, model, data_stat, prior, N=10_000, replications=200, seed=206, markov=False
    )
    elapsed = time.perf_counter() - t0
    rate = float((report.statistics > 6.63).mean())
    ok = rate <= 0.05 and abs(report.threshold - 6.63) < 0.01 and elapsed < 600
    _report(
        "ACD null rejection rate <= 5% at the 6.63 threshold over 200 reps",
        ok,
        f"rate={rate:.3f}, {elapsed:.0f}s",
    )
    assert abs(report.threshold - 6.63) < 0.01
    assert rate <= 0.05
    assert elapsed < 600


def test_acd_discriminates_inner_length_on_15x15_lattice(lattice_15):
    model = PottsModel(15, 15, 4)
    prior = IndependentNormalPrior([1.0], [1.0])
    data_stat = model.suffstat(lattice_15)
    ms = (1, 10, 30, 100, 300)
    means, passes = [], []
    threshold = float(chi2.ppf(0.99, 1))
    for m in ms:
        proposal = RandomWalkProposal(np.eye(1) * 0.05**2, adapt=True, adapt_until=3000)
        trace = run_chain(
            DmhKernel(model, lattice_15, prior, proposal, InnerSamplerConfig("gibbs", m)),
            20_000,
            np.array([1.0]),
            make_rng(31, m),
        )
        report = acd(
            trace.theta_matrix()[3000:],
            model,
            data_stat,
            prior,
            N=2000,
            replications=30,
            seed=77,
            refs=5,
            pool_kwargs={"exact": False, "spacing": 3, "init_state": lattice_15, "kind": "gibbs"},
        )
        means.append(report.mean)
        passes.append(report.passed)
        threshold = report.threshold
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    ok = decreasing and (not passes[0]) and passes[-1]
    _report(
        "mean ACD decreases over the 5-point m grid with a fail and a pass",
        ok,
        "means=" + "/".join(f"{v:.1f}" for v in means) + f", thr={threshold:.2f}",
    )
    assert decreasing
    assert not passes[0], "shortest inner chain should fail the diagnostic"
    assert passes[-1], "longest inner chain should pass the diagnostic"


def test_florentine_ergm_grid_and_alr_agreement(florentine):
    model = ErgmModel(16)
    assert int(florentine.sum()) // 2 == 20  # 16 nodes, 20 edges
    prior = IndependentNormalPrior([0.0, 0.0], [5.0, 5.0])
    data_stat = model.suffstat(florentine)
    t0 = time.perf_counter()
    results = {}
    dmh3 = None
    for m in range(1, 6):
        proposal = RandomWalkProposal(np.eye(2) * 0.1**2, adapt=True, adapt_until=20_000)
        trace = run_chain(
            DmhKernel(model, florentine, prior, proposal, InnerSamplerConfig("gibbs", m)),
            200_000,
            np.zeros(2),
            make_rng(61, m),
        )
        thetas = trace.theta_matrix()[20_000::10]
        if m == 3:
            dmh3 = thetas
        report = acd(
            thetas[::2],
            model,
            data_stat,
            prior,
            N=5000,
            replications=6,
            seed=88,
            stream=(m,),
            refs=12,
            pool_kwargs={"exact": False, "spacing": 20, "init_state": florentine, "kind": "gibbs"},
        )
        results[m] = report
    grid_ok = (not results[1].passed) and all(results[m].passed for m in (3, 4, 5))
    threshold_ok = abs(results[1].threshold - 11.34) < 0.01

    particles = select_particles(dmh3, 200)
    alr_trace = alr_run(
        florentine,
        model,
        prior,
        RandomWalkProposal(np.cov(dmh3.T) * 0.5),
        particles,
        30_000,
        make_rng(62),
        inner_kind="gibbs",
        grow_until=4000,
        init_theta=dmh3.mean(axis=0),
    )
    alr = alr_trace.theta_matrix()[6000:]
    overlap = True
    ci_txt = []
    for j in range(2):
        lo_d, hi_d = np.percentile(dmh3[:, j], [2.5, 97.5])
        lo_a, hi_a = np.percentile(alr[:, j], [2.5, 97.5])
        overlap &= max(lo_d, lo_a) <= min(hi_d, hi_a)
        ci_txt.append(f"[{lo_d:.2f},{hi_d:.2f}]~[{lo_a:.2f},{hi_a:.2f}]")
    elapsed = time.perf_counter() - t0
    ok = grid_ok and threshold_ok and overlap and elapsed < 1800
    _report(
        "Florentine DMH grid fails m=1 / passes m>=3 at 11.34; ALR(d=200) CIs overlap DMH(m=3)",
        ok,
        "acd=" + "/".join(f"{results[m].mean:.1f}" for m in range(1, 6))
        + " ci " + " ".join(ci_txt) + f", {elapsed:.0f}s",
    )
    assert threshold_ok
    assert grid_ok, {m: results[m].mean for m in results}
    assert overlap, ci_txt
    assert elapsed < 1800


def _gwesp_bruteforce(adj: np.ndarray) -> float:
    n = adj.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if not adj[i, j]:
                continue
            shared = sum(1 for k in range(n) if adj[i, k] and adj[j, k])
            total += np.exp(GWESP_DECAY) * (1.0 - (1.0 - np.exp(-GWESP_DECAY)) ** shared)
    return total


def test_gwesp_matches_bruteforce_oracle():
    triangle = (np.ones((3, 3)) - np.eye(3)).astype(int)
    model3 = ErgmModel(3)
    s2 = float(model3.suffstat(triangle)[1])
    triangle_ok = abs(s2 - 3.0) < 1e-12

    model10 = ErgmModel(10)
    rng = make_rng(208)
    max_err = 0.0
    for _ in range(100):
        adj = np.triu(rng.random((10, 10)) < 0.5, 1).astype(int)
        adj = adj + adj.T
        got = float(model10.suffstat(adj)[1])
        want = _gwesp_bruteforce(adj)
        max_err = max(max_err, abs(got - want))
    ok = triangle_ok and max_err < 1e-9
    _report("GWESP: triangle S2 = 3 and 100 random graphs match brute force", ok,
            f"S2={s2}, max_err={max_err:.2e}")
    assert triangle_ok
    assert max_err < 1e-9


# Frozen from an exhaustive-quadrature oracle: 21-point grid per coordinate
# over [-2.2, 2.2]^6, inclusion indicators marginalized analytically, for the
# synthetic 5x3 binary dataset drawn below with fixed hyperparameters
# sigma^2 = 1/20, omega = 4.
SPIKE_SLAB_ORACLE = np.array(
    [0.538986, 0.453101, 0.453101, 0.455291, 0.455291, 0.487463]
)


def test_spike_slab_inclusion_matches_quadrature_oracle():
    from nfbayes.spikeslab import inclusion_probabilities, spike_slab_dmh_run

    xdat = make_rng(40, 9).integers(0, 2, size=(5, 3))
    t0 = time.perf_counter()
    trace = spike_slab_dmh_run(
        xdat,
        120_000,
        make_rng(41, 0),
        m=50,
        update_hyper=False,
        init_sigma2=1.0 / 20.0,
        init_omega=4.0,
        theta_scale=0.3,
    )
    elapsed = time.perf_counter() - t0
    probs = inclusion_probabilities(trace, burnin=12_000)
    err = float(np.abs(probs - SPIKE_SLAB_ORACLE).max())
    ok = err < 0.05 and elapsed < 600
    _report(
        "spike-and-slab inclusion probabilities within 0.05 of quadrature",
        ok,
        f"max_err={err:.4f}, {elapsed:.0f}s",
    )
    assert err < 0.05
    assert elapsed < 600


def test_emulated_likelihood_posterior_and_gp_interpolation():
    model, prior, grid, weights = _testbed()
    oracle_mean = float(grid @ weights)
    t0 = time.perf_counter()
    trace = likem_run(
        DATA_2X2,
        model,
        prior,
        20_000,
        make_rng(210),
        d=10,
        N=10_000,
    )
    elapsed = time.perf_counter() - t0
    mean = float(trace.theta_matrix()[2000:, 0].mean())
    mean_err = abs(mean - oracle_mean)

    # noise-free GP interpolation on exact log-likelihood values
    particles = np.linspace(0.2, 2.8, 12)[:, None]
    stat = float(model.suffstat(DATA_2X2)[0])
    values = np.array(
        [t * stat - model.enumerate_log_normalizer([t]) for t in particles[:, 0]]
    )
    surrogate = gp_fit(particles, values, rng=make_rng(211))
    pred, _ = surrogate.predict(particles)
    interp_err = float(np.abs(pred - values).max())

    ok = mean_err < 0.03 and interp_err < 1e-6 and elapsed < 300
    _report(
        "emulated posterior mean within 0.03 of quadrature; GP interpolates to 1e-6",
        ok,
        f"mean_err={mean_err:.4f}, interp_err={interp_err:.2e}, {elapsed:.0f}s",
    )
    assert mean_err < 0.03
    assert interp_err < 1e-6
    assert elapsed < 300


def test_rerun_from_stored_config_is_byte_identical(tmp_path):
    cfg = parse_config(
        {
            "model": {"kind": "potts", "rows": 2, "cols": 2, "colors": 2},
            "data": str(DATA / "potts_2x2.txt"),
            "prior": {"kind": "uniform_box", "lo": 0.0, "hi": 3.0},
            "sampler": {"kind": "dmh", "grid": [3], "proposal_scale": 0.5, "init": [1.0]},
            "iterations": 2000,
            "burnin": 200,
            "acd": {"N": 500, "replications": 2},
            "seed": 19,
        }
    )
    run_experiment(cfg, tmp_path / "a", workers=1)
    with open(tmp_path / "a" / "config.json") as fh:
        stored = parse_config(json.load(fh))
    run_experiment(stored, tmp_path / "b", workers=1)
    first = (tmp_path / "a" / "entry_3" / "trace.csv").read_bytes()
    second = (tmp_path / "b" / "entry_3" / "trace.csv").read_bytes()
    ok = first == second
    _report("rerun from stored config reproduces byte-identical traces", ok)
    assert ok
