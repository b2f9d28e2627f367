import numpy
import pytest

from drift_ensemble.analysis.baselines import build_sequential_elm, build_static_elm
from drift_ensemble.analysis.elm import sequential_update
from drift_ensemble.analysis.ensemble import fit_initial_model, init_ensemble
from drift_ensemble.common.errors import DataError
from drift_ensemble.common.models import Sample

from conftest import plant_samples


def test_fit_initial_model_is_shared(small_config, stationary_samples):
    a = fit_initial_model(stationary_samples[:70], small_config)
    b = fit_initial_model(stationary_samples[:70], small_config)
    assert a.n_hidden == b.n_hidden
    assert a.n_hidden in small_config.hidden_candidates
    numpy.testing.assert_array_equal(a.state.beta, b.state.beta)
    assert a.last_index == 69


def test_fit_initial_model_fixed_hidden_size(small_config, stationary_samples):
    initial = fit_initial_model(stationary_samples[:70], small_config.replace(n_hidden=7))
    assert initial.n_hidden == 7
    assert initial.state.hidden.n_hidden == 7


def test_static_elm_never_changes(small_config):
    samples = plant_samples(200, seed=2, eff=numpy.linspace(1.0, 0.9, 200))
    model = build_static_elm(samples[:70], small_config)
    beta = model.state.beta.copy()
    for s in samples[70:]:
        trace = model.process(s)
        assert trace.size == 1
        assert not trace.spawned
    assert numpy.array_equal(model.state.beta, beta)
    assert model.last_trained_index == 69


def test_sequential_elm_is_direct_rls(small_config, stationary_samples):
    model = build_sequential_elm(stationary_samples[:70], small_config)
    reference = fit_initial_model(stationary_samples[:70], small_config)
    for s in stationary_samples[70:120]:
        trace = model.process(s)
        assert trace.trained_through < s.index
        sequential_update(reference.state, reference.x_scaler.transform(s.x), reference.y_scaler.transform(s.y))
    numpy.testing.assert_array_equal(model.state.beta, reference.state.beta)
    assert model.last_trained_index == 119


def test_ensemble_of_one_matches_sequential_elm(small_config, stationary_samples):
    cfg = small_config.replace(delta=(1e9,))
    ens = init_ensemble(stationary_samples[:70], cfg)
    os_elm = build_sequential_elm(stationary_samples[:70], cfg)
    for s in stationary_samples[70:]:
        a = ens.process_sample(s)
        b = os_elm.process(s)
        assert numpy.array_equal(a.prediction, b.prediction)
    numpy.testing.assert_array_equal(ens.members[0].model.beta, os_elm.state.beta)


def test_baseline_rejects_invalid_sample(small_config, stationary_samples):
    model = build_sequential_elm(stationary_samples[:70], small_config)
    with pytest.raises(DataError):
        model.process(Sample(70, stationary_samples[70].x, [0.0, 1.0]))
