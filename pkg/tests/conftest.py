import pathlib

import numpy as np
import pytest

from nfbayes.models import PottsModel, read_edge_list, read_lattice
from nfbayes.rng import make_rng

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def potts_2x2():
    return PottsModel(2, 2, 2)


@pytest.fixture
def testbed_data():
    return np.array([[1, 1], [2, 1]])


@pytest.fixture
def florentine():
    return read_edge_list(DATA / "florentine.txt", n=16)


@pytest.fixture
def lattice_15():
    return read_lattice(DATA / "potts_15x15.txt")


@pytest.fixture
def rng():
    return make_rng(12345)


def quadrature_posterior(model, data_stat, lo, hi, points=2000):
    """Grid posterior over a 1-D uniform-box prior for oracle comparisons."""
    grid = np.linspace(lo, hi, points)
    logz = np.array([model.enumerate_log_normalizer([g]) for g in grid])
    logpost = grid * float(data_stat) - logz
    w = np.exp(logpost - logpost.max())
    w /= w.sum()
    return grid, w


def ks_distance(samples, grid, weights):
    """KS distance between an empirical sample and a grid distribution."""
    cdf = np.cumsum(weights)
    ranks = np.searchsorted(np.sort(samples), grid, side="right") / len(samples)
    return float(np.abs(ranks - cdf).max())
