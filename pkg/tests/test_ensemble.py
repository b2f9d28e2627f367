import logging
import math

import numpy
import pytest

from drift_ensemble.analysis import ensemble as ensemble_module
from drift_ensemble.analysis.elm import ElmState, init_hidden_layer, predict
from drift_ensemble.analysis.ensemble import (
    EnsembleConfig,
    EnsembleMember,
    MemoryMode,
    check_spawn_trigger,
    init_ensemble,
    member_error,
    normalize_weights,
    prune,
    update_mse,
    update_weights,
    weighted_vote,
)
from drift_ensemble.common.errors import ConfigError, DataError, NumericalError
from drift_ensemble.common.models import Sample
from drift_ensemble.evaluate.metrics import percentage_error

from conftest import plant_samples


def _member(member_id=0, mse=0.0, weight=1.0, ws=10, n_outputs=2):
    layer = init_hidden_layer(3, 2, seed=member_id)
    state = ElmState(layer, numpy.zeros((3, n_outputs)), numpy.eye(3))
    m = EnsembleMember(member_id, state, ws, weight=weight)
    m.mse = mse
    return m


def _step_stream(n_before=150, n_after=100, seed=5):
    eff = numpy.r_[numpy.full(n_before, 1.0), numpy.full(n_after, 1.1)]
    return plant_samples(n_before + n_after, seed=seed, eff=eff)


def test_memory_mode_from_name():
    assert MemoryMode.from_name('stm') == MemoryMode.STM_ONLY
    assert MemoryMode.from_name('stm+ltm') == MemoryMode.STM_PLUS_LTM
    with pytest.raises(ValueError):
        MemoryMode.from_name('ltm')


def test_config_validation():
    with pytest.raises(ConfigError):
        EnsembleConfig(ws=50, hidden_candidates=(10, 80))
    with pytest.raises(ConfigError):
        EnsembleConfig(ws=100, max_size=0)
    with pytest.raises(ConfigError):
        EnsembleConfig(ws=100, delta=(0.0,))
    cfg = EnsembleConfig(ws=100)
    numpy.testing.assert_array_equal(cfg.delta_for(2), [0.04, 0.04])
    with pytest.raises(ConfigError):
        EnsembleConfig(ws=100, delta=(0.01, 0.02, 0.03)).delta_for(2)


def test_weighted_vote():
    numpy.testing.assert_allclose(weighted_vote(numpy.array([[1.0, 3.0]]), numpy.array([0.7])), [1.0, 3.0])
    numpy.testing.assert_allclose(
        weighted_vote(numpy.array([[1.0, 3.0], [3.0, 5.0]]), numpy.array([0.5, 0.5])), [2.0, 4.0])
    assert weighted_vote(numpy.array([[0.0], [4.0]]), numpy.array([1.0, 3.0]))[0] == pytest.approx(3.0)


def test_weighted_vote_is_scale_invariant():
    outputs = numpy.array([[1.0, 2.0], [5.0, -1.0], [0.5, 0.5]])
    w = numpy.array([0.2, 1.3, 0.7])
    numpy.testing.assert_allclose(weighted_vote(outputs, w), weighted_vote(outputs, 10 * w), rtol=0, atol=1e-12)


def test_weighted_vote_zero_weights_falls_back_to_mean(caplog):
    with caplog.at_level(logging.WARNING):
        y = weighted_vote(numpy.array([[1.0], [3.0]]), numpy.zeros(2))
    assert y[0] == 2.0
    assert 'unweighted mean' in caplog.text


def test_member_error():
    m = _member()
    assert member_error(m, [0.3, 0.1], [0.0, 0.0]) == 0.0
    assert member_error(m, [0.3, 0.1], [1.0, 2.0]) == 5.0
    assert member_error(m, [0.3, 0.1], [2.0, 1.0]) == 5.0


def test_update_mse_first_updates():
    m = _member()
    update_mse(m, 0.5)
    assert m.mse == 0.5
    assert m.life == 1
    update_mse(m, 0.1)
    assert m.mse == pytest.approx(0.3)
    assert m.life == 2


@pytest.mark.parametrize('ws', [5, 100])
def test_update_mse_matches_window_mean(ws):
    rng = numpy.random.default_rng(ws)
    for _ in range(200):
        m = _member(ws=ws)
        errors = rng.exponential(size=3 * ws)
        for t, e in enumerate(errors, 1):
            update_mse(m, float(e))
            assert abs(m.mse - errors[max(0, t - ws):t].mean()) < 1e-9


@pytest.mark.slow
@pytest.mark.parametrize('ws', [5, 100])
def test_update_mse_matches_window_mean_full_scale(ws):
    rng = numpy.random.default_rng(ws + 1)
    for _ in range(10000):
        m = _member(ws=ws)
        errors = rng.exponential(size=3 * ws)
        for t, e in enumerate(errors, 1):
            update_mse(m, float(e))
        assert abs(m.mse - errors[-ws:].mean()) < 1e-9


def test_update_mse_rejects_negative():
    with pytest.raises(ValueError):
        update_mse(_member(), -1.0)


def test_update_weights_spot_values():
    members = [_member(i, mse) for i, mse in enumerate([0.1, 0.2, 0.4])]
    update_weights(members)
    assert abs(members[0].weight - math.exp(0.5)) < 1e-12
    assert members[1].weight == 1.0
    assert abs(members[2].weight - math.exp(-1.0)) < 1e-12


def test_update_weights_reverse_of_mse_order():
    rng = numpy.random.default_rng(3)
    members = [_member(i, float(v)) for i, v in enumerate(rng.uniform(0.01, 1.0, size=7))]
    update_weights(members)
    by_mse = sorted(members, key=lambda m: m.mse)
    weights = [m.weight for m in by_mse]
    assert weights == sorted(weights, reverse=True)
    assert len(set(weights)) == len(weights)


def test_update_weights_zero_median():
    members = [_member(0, 0.0), _member(1, 0.0), _member(2, 0.3)]
    update_weights(members)
    assert [m.weight for m in members] == [1.0, 1.0, 1.0]


def test_normalize_weights():
    members = [_member(0, weight=2.0), _member(1, weight=2.0)]
    normalize_weights(members)
    assert [m.weight for m in members] == [0.5, 0.5]
    members = [_member(0, weight=1.0), _member(1, weight=3.0)]
    normalize_weights(members)
    assert [m.weight for m in members] == [0.25, 0.75]


def test_normalize_weights_all_zero_becomes_uniform():
    members = [_member(i, weight=0.0) for i in range(4)]
    normalize_weights(members)
    assert [m.weight for m in members] == [0.25] * 4


def test_check_spawn_trigger():
    assert not check_spawn_trigger([100.0, 50.0], [100.0, 50.0], [0.04, 0.04])
    assert check_spawn_trigger([95.0], [100.0], [0.04])
    assert not check_spawn_trigger([97.0], [100.0], [0.04])
    # either output over its threshold is enough
    assert check_spawn_trigger([100.0, 45.0], [100.0, 50.0], [0.04, 0.04])


def test_prune():
    members = [_member(i, mse) for i, mse in enumerate([0.2, 0.5, 0.1])]
    assert prune(members, 3) == []
    assert len(members) == 3

    removed = prune(members, 2)
    assert [m.member_id for m in removed] == [1]
    assert [m.member_id for m in members] == [0, 2]


def test_prune_ties_remove_oldest_and_spare_new_member():
    members = [_member(0, 0.3), _member(1, 0.3), _member(2, 0.0)]
    removed = prune(members, 2)
    assert [m.member_id for m in removed] == [0]
    assert 2 in [m.member_id for m in members]


def test_init_ensemble(small_config, stationary_samples):
    init = stationary_samples[:70]
    ens = init_ensemble(init, small_config)
    assert ens.size == 1
    assert ens.members[0].weight == 1.0
    assert ens.members[0].life == 0
    assert ens.members[0].mse == 0.0
    assert [s.index for s in ens.stm] == [s.index for s in init[-60:]]
    assert sorted(s.index for s in ens.ltm) == [s.index for s in init[:60]]
    assert ens.ltm.stream_count == 60


def test_init_ensemble_needs_enough_data(small_config, stationary_samples):
    with pytest.raises(ConfigError):
        init_ensemble(stationary_samples[:30], small_config)
    with pytest.raises(ConfigError):
        # cross validation over L <= 10 with 3 folds needs 15 samples
        init_ensemble(stationary_samples[:12], small_config.replace(ws=12))


def test_init_ensemble_deterministic(small_config, stationary_samples):
    a = init_ensemble(stationary_samples[:70], small_config)
    b = init_ensemble(stationary_samples[:70], small_config)
    x = stationary_samples[100].x
    numpy.testing.assert_array_equal(a.ensemble_predict(x), b.ensemble_predict(x))


def test_stationary_stream_never_spawns(small_config, stationary_samples):
    ens = init_ensemble(stationary_samples[:70], small_config.replace(delta=(10.0,)))
    for s in stationary_samples[70:]:
        trace = ens.process_sample(s)
        assert not trace.spawned
        assert trace.size == 1
    assert ens.spawn_count == 0


def test_process_sample_invariants(small_config):
    samples = plant_samples(400, seed=7, noise=0.005)
    cfg = small_config.replace(delta=(0.002,))
    ens = init_ensemble(samples[:70], cfg)
    for s in samples[70:]:
        trace = ens.process_sample(s)
        assert 1 <= trace.size <= cfg.max_size
        assert len(trace.members) == ens.size
        assert abs(sum(m.weight for m in trace.members) - 1.0) < 1e-12
        for m in ens.members:
            if m.life == 0:
                # spawned on this step
                continue
            window = list(m.err_window)
            assert abs(m.mse - numpy.mean(window)) < 1e-9
            assert len(window) == min(m.life, cfg.ws)
        assert trace.trained_through < s.index
    assert ens.spawn_count > 0


def test_process_sample_rejects_invalid_without_state_change(small_config, stationary_samples):
    ens = init_ensemble(stationary_samples[:70], small_config)
    ens.process_sample(stationary_samples[70])
    before = (ens.size, len(ens.stm), ens.ltm.stream_count, ens.members[0].life, ens.members[0].model.beta.copy())

    bad = Sample(71, stationary_samples[71].x, [0.0, 9000.0])
    with pytest.raises(DataError):
        ens.process_sample(bad)
    with pytest.raises(DataError):
        ens.process_sample(Sample(71, [numpy.nan] * 9, stationary_samples[71].y))

    assert (ens.size, len(ens.stm), ens.ltm.stream_count, ens.members[0].life) == before[:4]
    numpy.testing.assert_array_equal(ens.members[0].model.beta, before[4])


def test_step_change_spawns_at_first_changed_sample(small_config):
    samples = _step_stream()
    ens = init_ensemble(samples[:70], small_config.replace(delta=(0.01,)))
    traces = {s.index: ens.process_sample(s) for s in samples[70:]}
    first_after = traces[150]
    assert first_after.ape[0] > 1.0
    assert first_after.spawned


def test_original_mode_trains_on_window_contents(small_config):
    samples = _step_stream()
    ens = init_ensemble(samples[:70], small_config.replace(delta=(0.01,), memory_mode=MemoryMode.STM_ONLY))
    for s in samples[70:150]:
        ens.process_sample(s)

    window = [s.index for s in ens.stm]
    trace = ens.process_sample(samples[150])
    assert trace.spawned
    newest = max(ens.members, key=lambda m: m.member_id)
    assert list(newest.training_indices) == window


def test_modified_mode_trains_on_current_sample_first(small_config):
    samples = _step_stream()
    ens = init_ensemble(samples[:70], small_config.replace(delta=(0.01,)))
    for s in samples[70:150]:
        ens.process_sample(s)

    trace = ens.process_sample(samples[150])
    assert trace.spawned
    newest = max(ens.members, key=lambda m: m.member_id)
    assert newest.training_indices[0] == 150
    assert len(newest.training_indices) >= small_config.ws
    # the spawning sample is stored in the reservoir
    assert samples[150] in ens.ltm


def test_new_member_fits_its_spawning_sample(small_config):
    samples = plant_samples(300, seed=9, noise=0.005)
    ens = init_ensemble(samples[:70], small_config.replace(delta=(0.001,)))
    for s in samples[70:]:
        trace = ens.process_sample(s)
        if trace.spawned:
            newest = max(ens.members, key=lambda m: m.member_id)
            x_std = ens.x_scaler.transform(s.x)
            y_hat = ens.y_scaler.inverse_transform(predict(newest.model, x_std))
            assert (percentage_error(y_hat, s.y) < 4.0).all()
            break
    else:
        pytest.fail("no member was spawned")


def test_failed_member_update_is_flagged(monkeypatch, small_config, stationary_samples):
    ens = init_ensemble(stationary_samples[:70], small_config)
    beta = ens.members[0].model.beta.copy()

    def reject(state, x, y):
        raise NumericalError("degenerate")

    monkeypatch.setattr(ensemble_module, 'sequential_update', reject)
    trace = ens.process_sample(stationary_samples[70])
    assert trace.failed_members == [0]
    numpy.testing.assert_array_equal(ens.members[0].model.beta, beta)


def test_full_run_is_deterministic(small_config):
    samples = _step_stream()

    def run():
        ens = init_ensemble(samples[:70], small_config.replace(delta=(0.01,)))
        return [(t.prediction.tolist(), t.spawned, t.pruned, [tuple(m) for m in t.members])
                for t in (ens.process_sample(s) for s in samples[70:])]

    assert run() == run()
