import numpy
import pytest

from drift_ensemble.analysis.ensemble import EnsembleConfig
from drift_ensemble.common.models import Sample
from drift_ensemble.ingest.surrogate import SurrogateParams, gen_inputs, plant_surrogate


def make_samples(X, Y, start: int = 0):
    Y = numpy.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    return [Sample(start + i, x, y) for i, (x, y) in enumerate(zip(X, Y))]


def plant_samples(n: int, seed: int = 0, eff=1.0, noise: float = 0.0):
    """
    Surrogate samples at a fixed or per-step efficiency, no outliers.
    """
    params = SurrogateParams(noise=noise, outlier_prob=0.0)
    X = gen_inputs(n, seed)
    rng = numpy.random.default_rng(seed + 1) if noise else None
    power, heat_rate = plant_surrogate(X, numpy.broadcast_to(eff, (n,)), params, rng)
    return make_samples(X, numpy.column_stack([power, heat_rate]))


@pytest.fixture
def rng():
    return numpy.random.default_rng(0)


@pytest.fixture
def small_config():
    return EnsembleConfig(ws=60, delta=(0.04,), max_size=4, hidden_candidates=(5, 10), cv_folds=3, seed=0)


@pytest.fixture
def stationary_samples():
    return plant_samples(400, seed=3)
