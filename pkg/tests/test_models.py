import numpy as np
import pytest

from nfbayes.models import (
    DimensionMismatchError,
    ErgmModel,
    IntractableSizeError,
    IsingNetworkModel,
    PottsModel,
    gwesp_weights,
    read_edge_list,
    read_item_responses,
    read_lattice,
    write_edge_list,
    write_item_responses,
    write_lattice,
)
from nfbayes.rng import make_rng


class TestPotts:
    def test_all_same_color_suffstat(self, potts_2x2):
        assert potts_2x2.suffstat(np.array([[1, 1], [1, 1]])) == 4

    def test_checkerboard_suffstat(self, potts_2x2):
        assert potts_2x2.suffstat(np.array([[1, 2], [2, 1]])) == 0

    def test_log_normalizer_at_zero(self, potts_2x2):
        assert np.isclose(potts_2x2.enumerate_log_normalizer([0.0]), np.log(16))

    def test_log_normalizer_at_one(self, potts_2x2):
        expect = np.log(2 * np.e**4 + 12 * np.e**2 + 2)
        assert np.isclose(potts_2x2.enumerate_log_normalizer([1.0]), expect)

    def test_suffstat_multiplicities(self, potts_2x2):
        stats = potts_2x2.enumerate_suffstats()[:, 0]
        counts = dict(zip(*np.unique(stats, return_counts=True)))
        assert counts == {0: 2, 2: 12, 4: 2}

    def test_change_stat_matches_recompute(self):
        model = PottsModel(4, 5, 3)
        rng = make_rng(3)
        state = model.random_state(rng)
        for _ in range(50):
            i = rng.integers(4)
            j = rng.integers(5)
            c = int(rng.integers(1, 4))
            before = model.suffstat(state)
            delta = model.change_stat(state, (i, j), c)
            state[i, j] = c
            assert model.suffstat(state) - before == delta

    def test_enumeration_cap(self):
        with pytest.raises(IntractableSizeError):
            PottsModel(10, 10, 4).enumerate_suffstats()

    def test_bad_theta_dimension(self, potts_2x2):
        with pytest.raises(DimensionMismatchError):
            potts_2x2.check_theta(np.array([1.0, 2.0]))


class TestErgm:
    def test_triangle_stats(self):
        model = ErgmModel(3)
        tri = np.ones((3, 3), dtype=np.int64) - np.eye(3, dtype=np.int64)
        s = model.suffstat(tri)
        assert s[0] == 3
        # one shared partner per connected pair: 3 * w_1 = 3 * e^{0.2}(1 - e^{-0.2})... = 3
        assert np.isclose(s[1], 3 * gwesp_weights(3)[1])

    def test_triangle_gwesp_value(self):
        tri = np.ones((3, 3), dtype=np.int64) - np.eye(3, dtype=np.int64)
        assert np.isclose(ErgmModel(3).suffstat(tri)[1], 3.0)

    def test_empty_graph(self):
        model = ErgmModel(5)
        assert np.allclose(model.suffstat(np.zeros((5, 5), dtype=np.int64)), 0.0)

    def test_gwesp_matches_bruteforce(self):
        model = ErgmModel(10)
        rng = make_rng(77)
        for _ in range(100):
            adj = model.random_state(rng, p=float(rng.uniform(0.1, 0.6)))
            assert np.allclose(model.suffstat(adj), model.suffstat_bruteforce(adj))

    def test_change_stat_matches_recompute(self):
        model = ErgmModel(8)
        rng = make_rng(8)
        adj = model.random_state(rng)
        for _ in range(60):
            i, j = rng.integers(8), rng.integers(8)
            if i == j:
                continue
            before = model.suffstat(adj)
            delta = model.change_stat(adj, (i, j), 1 - adj[i, j])
            model.apply_change(adj, (i, j), 1 - adj[i, j])
            assert np.allclose(model.suffstat(adj) - before, delta)

    def test_weights_start_at_zero(self):
        w = gwesp_weights(6)
        assert w[0] == 0.0
        assert np.all(np.diff(w) > 0)

    def test_esp_counts_triangle(self):
        tri = np.ones((3, 3), dtype=np.int64) - np.eye(3, dtype=np.int64)
        counts = ErgmModel(3).esp_counts(tri)
        assert counts[1] == 3


class TestIsingNetwork:
    def test_tiny_instance_suffstat(self):
        model = IsingNetworkModel(1, 2)
        x = np.array([[1, 1]])
        assert np.allclose(model.suffstat(x), [1, 1, 1])

    def test_row_factorized_normalizer(self):
        model = IsingNetworkModel(3, 2)
        theta = np.array([0.3, -0.2, 0.5])
        direct = model.enumerate_log_normalizer(theta)
        from scipy.special import logsumexp

        per_row = logsumexp(model.row_pattern_suffstats() @ theta)
        assert np.isclose(direct, 3 * per_row)

    def test_change_stat(self):
        model = IsingNetworkModel(4, 3)
        rng = make_rng(4)
        x = model.random_state(rng)
        for _ in range(40):
            i, j = rng.integers(4), rng.integers(3)
            before = model.suffstat(x)
            delta = model.change_stat(x, (i, j), 1 - x[i, j])
            x[i, j] = 1 - x[i, j]
            assert np.allclose(model.suffstat(x) - before, delta)

    def test_dim(self):
        assert IsingNetworkModel(316, 12).dim == 12 + 66


class TestIo:
    def test_lattice_roundtrip(self, tmp_path):
        cells = np.array([[1, 2, 3], [3, 2, 1]])
        path = tmp_path / "lat.txt"
        write_lattice(path, cells)
        assert np.array_equal(read_lattice(path), cells)

    def test_edge_list_roundtrip(self, tmp_path):
        adj = np.zeros((4, 4), dtype=np.int64)
        adj[0, 1] = adj[1, 0] = 1
        adj[2, 3] = adj[3, 2] = 1
        path = tmp_path / "g.txt"
        write_edge_list(path, adj)
        assert np.array_equal(read_edge_list(path, n=4), adj)

    def test_edge_list_isolated_node(self, tmp_path):
        adj = np.zeros((3, 3), dtype=np.int64)
        adj[0, 1] = adj[1, 0] = 1
        path = tmp_path / "g.txt"
        write_edge_list(path, adj)
        assert read_edge_list(path, n=3).shape == (3, 3)

    def test_item_responses_roundtrip(self, tmp_path):
        x = np.array([[0, 1, 1], [1, 0, 0]])
        path = tmp_path / "x.csv"
        write_item_responses(path, x)
        assert np.array_equal(read_item_responses(path), x)

    def test_item_responses_rejects_nonbinary(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("0,2\n1,0\n")
        with pytest.raises(ValueError):
            read_item_responses(path)

    def test_florentine_fixture(self, florentine):
        assert florentine.shape == (16, 16)
        assert florentine.sum() // 2 == 20
        assert florentine[15].sum() == 0  # the isolated family
