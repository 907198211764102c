import numpy as np
import pytest

from nfbayes.diagnostics import (
    AcdReport,
    DiagnosticDimensionError,
    acd,
    acd_statistic,
    assign_references,
    batch_means_cov,
    curvature_series,
    curvature_series_multi,
    score_terms,
    vech_indices,
)
from nfbayes.emulation import build_pool
from nfbayes.models import PottsModel
from nfbayes.priors import IndependentNormalPrior, UniformBoxPrior
from nfbayes.rng import make_rng


class TestVech:
    def test_ordering_p2(self):
        rows, cols = vech_indices(2)
        assert list(zip(rows, cols)) == [(0, 0), (1, 0), (1, 1)]

    def test_length(self):
        rows, _ = vech_indices(4)
        assert len(rows) == 10


class TestScoreTerms:
    def test_matches_enumeration(self, potts_2x2, testbed_data, rng):
        theta = np.array([0.9])
        prior = IndependentNormalPrior([1.0], [1.0])
        pool = build_pool(potts_2x2, theta, 200_000, rng=rng, exact=True)
        u, H = score_terms(
            potts_2x2, potts_2x2.suffstat(testbed_data), prior, theta, pool
        )
        stats = potts_2x2.enumerate_suffstats().astype(float)[:, 0]
        probs = np.exp(
            stats * theta[0] - potts_2x2.enumerate_log_normalizer(theta)
        )
        mu = probs @ stats
        var = probs @ stats**2 - mu**2
        data_stat = float(potts_2x2.suffstat(testbed_data)[0])
        assert np.isclose(u[0], data_stat - mu + (1.0 - theta[0]), atol=0.02)
        assert np.isclose(H[0, 0], -var - 1.0, atol=0.05)


class TestBatchMeans:
    def test_iid_matches_sample_cov(self, rng):
        x = rng.normal(size=(40_000, 2))
        V = batch_means_cov(x)
        assert np.allclose(V, np.eye(2), atol=0.15)

    def test_ar1_inflates_variance(self, rng):
        n = 40_000
        rho = 0.9
        x = np.empty(n)
        x[0] = 0.0
        eps = rng.normal(size=n)
        for t in range(1, n):
            x[t] = rho * x[t - 1] + eps[t]
        V = batch_means_cov(x[:, None])
        # long-run variance of AR(1): (1 - rho^2)^-1 * (1+rho)/(1-rho) * ... = 1/(1-rho)^2
        truth = 1.0 / (1 - rho) ** 2
        assert 0.5 * truth < V[0, 0] < 1.5 * truth

    def test_too_short_series(self):
        with pytest.raises(ValueError):
            batch_means_cov(np.zeros((3, 1)), batch_size=2)


class TestAcdMechanics:
    def test_dimension_cap(self, rng):
        thetas = rng.normal(size=(100, 40))  # r = 820 > 400
        with pytest.raises(DiagnosticDimensionError):
            acd(thetas, PottsModel(2, 2, 2), np.array([4.0]),
                IndependentNormalPrior([0.0] * 40, [1.0] * 40), N=100)

    def test_report_roundtrip(self, tmp_path):
        rep = AcdReport(
            statistics=np.array([1.0, 2.0, 3.0]),
            threshold=6.63,
            dof=1,
            n=100,
            N=50,
        )
        rep.save(tmp_path / "acd.json")
        import json

        back = json.loads((tmp_path / "acd.json").read_text())
        assert back["passed"] is True
        assert back["dof"] == 1
        assert len(back["statistics"]) == 3

    def test_threshold_values(self, potts_2x2, testbed_data, rng):
        prior = IndependentNormalPrior([1.0], [1.0])
        thetas = rng.normal(1.0, 0.1, size=(500, 1))
        rep = acd(thetas, potts_2x2, potts_2x2.suffstat(testbed_data), prior,
                  N=500, replications=2, markov=False)
        assert np.isclose(rep.threshold, 6.63, atol=0.005)

    def test_multi_reference_assignment(self, rng):
        thetas = np.concatenate([rng.normal(-3, 0.1, 500), rng.normal(3, 0.1, 500)])
        refs, assign = assign_references(thetas[:, None], 2)
        assert len(refs) == 2
        left = assign[thetas < 0]
        assert (left == left[0]).all()  # one cluster, one pool

    def test_statistic_nonnegative(self, potts_2x2, testbed_data, rng):
        prior = IndependentNormalPrior([1.0], [1.0])
        pool = build_pool(potts_2x2, np.array([1.0]), 2000, rng=rng, exact=True)
        thetas = rng.normal(1.0, 0.2, size=(1000, 1))
        series = curvature_series(
            thetas, potts_2x2, potts_2x2.suffstat(testbed_data), prior, pool
        )
        stat, _ = acd_statistic(series)
        assert stat >= 0.0

    def test_multi_pool_agrees_with_single_when_one_ref(
        self, potts_2x2, testbed_data, rng
    ):
        prior = IndependentNormalPrior([1.0], [1.0])
        theta_ref = np.array([1.0])
        pool = build_pool(potts_2x2, theta_ref, 2000, rng=make_rng(3), exact=True)
        thetas = rng.normal(1.0, 0.2, size=(500, 1))
        single = curvature_series(
            thetas, potts_2x2, potts_2x2.suffstat(testbed_data), prior, pool
        )
        multi = curvature_series_multi(
            thetas,
            potts_2x2,
            potts_2x2.suffstat(testbed_data),
            prior,
            [pool],
            np.zeros(len(thetas), dtype=int),
        )
        assert np.allclose(single.values, multi.values)
        assert np.allclose(single.pool_noise_cov(), multi.pool_noise_cov())


class TestNullBehavior:
    """Exact posterior draws should rarely trip the diagnostic; a crude
    sampler should trip it clearly.  (The full calibration study lives in
    the acceptance suite.)"""

    def _posterior_draws(self, model, data_stat, n, rng):
        # iid draws from the enumerated-grid posterior with a Normal(1,1) prior
        grid = np.linspace(-2, 4, 4001)
        logz = np.array([model.enumerate_log_normalizer([g]) for g in grid])
        logpost = grid * data_stat - logz - 0.5 * (grid - 1.0) ** 2
        w = np.exp(logpost - logpost.max())
        w /= w.sum()
        return rng.choice(grid, size=n, p=w)[:, None]

    def test_null_passes(self, potts_2x2, rng):
        data_stat = 3.0
        prior = IndependentNormalPrior([1.0], [1.0])
        thetas = self._posterior_draws(potts_2x2, data_stat, 20_000, rng)
        rep = acd(
            thetas, potts_2x2, np.array([data_stat]), prior,
            N=5000, replications=5, seed=11, markov=False,
        )
        assert rep.passed

    def test_wrong_target_fails(self, potts_2x2, rng):
        # posterior draws shifted by a constant: Bartlett identity breaks
        data_stat = 3.0
        prior = IndependentNormalPrior([1.0], [1.0])
        thetas = self._posterior_draws(potts_2x2, data_stat, 20_000, rng) + 0.3
        rep = acd(
            thetas, potts_2x2, np.array([data_stat]), prior,
            N=5000, replications=5, seed=11, markov=False,
        )
        assert not rep.passed
