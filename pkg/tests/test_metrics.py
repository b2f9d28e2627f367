import logging

import numpy
import pytest

from drift_ensemble.evaluate.metrics import (
    change_metadata,
    change_window_mape,
    change_window_mask,
    detect_change_points,
    mape,
    percentage_error,
    recovery_time,
)


class FakeReport(object):
    def __init__(self, indices, ape):
        self.indices = numpy.asarray(indices)
        self.ape = numpy.asarray(ape, dtype=float)
        if self.ape.ndim == 1:
            self.ape = self.ape[:, None]


def test_percentage_error():
    numpy.testing.assert_allclose(percentage_error([102.0, 9310.0], [100.0, 9500.0]), [2.0, 2.0])
    numpy.testing.assert_allclose(percentage_error([-1.0], [-2.0]), [50.0])


def test_uniform_error_gives_same_mape_everywhere():
    actual = numpy.linspace(100, 200, 500)
    ape = percentage_error(actual * 1.02, actual)
    report = FakeReport(numpy.arange(500), ape)
    assert mape(report.ape)[0] == pytest.approx(2.0)
    assert change_window_mape(report, [250], [100])[0] == pytest.approx(2.0)


def test_mape_per_output_and_empty():
    ape = numpy.array([[1.0, 4.0], [3.0, 8.0]])
    numpy.testing.assert_array_equal(mape(ape), [2.0, 6.0])
    numpy.testing.assert_array_equal(mape(ape, numpy.array([False, True])), [3.0, 8.0])
    assert numpy.isnan(mape(ape, numpy.array([False, False]))).all()


def test_change_window_only_counts_window():
    indices = numpy.arange(1000)
    ape = numpy.where((indices >= 400) & (indices < 700), 1.0, 10.0)
    report = FakeReport(indices, ape)
    assert change_window_mape(report, [500], [200], lead=100)[0] == pytest.approx(1.0)
    assert mape(report.ape)[0] == pytest.approx(7.3)


def test_change_window_union_of_windows():
    mask = change_window_mask(numpy.arange(100), [20, 60], [10, 10], lead=5)
    assert numpy.flatnonzero(mask).tolist() == list(range(15, 30)) + list(range(55, 70))


def test_change_window_clipped(caplog):
    indices = numpy.arange(200, 400)
    with caplog.at_level(logging.WARNING):
        mask = change_window_mask(indices, [250], [300], lead=100)
    assert mask.all()
    assert 'clipped' in caplog.text


def test_change_window_no_change_points():
    report = FakeReport(numpy.arange(10), numpy.ones(10))
    assert numpy.isnan(change_window_mape(report, [], []))[0]


def test_recovery_time_examples():
    report = FakeReport([10, 11, 12, 13], [50.0, 6.1, 3.0, 0.9])
    assert recovery_time(report, 11, threshold_pct=1.0).steps == [3]
    assert recovery_time(report, 11, threshold_pct=10.0).steps == [1]

    never = recovery_time(report, 11, threshold_pct=0.5)
    assert never.steps == [None]
    assert not never.recovered
    assert never.max_ape == [6.1]


def test_recovery_time_per_output_and_horizon():
    ape = numpy.array([[5.0, 0.5], [0.5, 9.0], [0.1, 20.0]])
    rec = recovery_time(FakeReport([0, 1, 2], ape), 0, threshold_pct=1.0, horizon=2)
    assert rec.steps == [2, 1]
    assert rec.recovered
    assert rec.max_ape == [5.0, 9.0]


def test_recovery_time_counts_stream_indices():
    # skipped rows still count as processed samples
    report = FakeReport([100, 101, 105], [4.0, 3.0, 0.2])
    assert recovery_time(report, 100).steps == [6]


def test_recovery_time_outside_scored_range():
    report = FakeReport([10, 11, 12], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        recovery_time(report, 5)
    with pytest.raises(ValueError):
        recovery_time(report, 13)


def test_detect_change_points():
    eff = numpy.concatenate([numpy.linspace(1.0, 0.9, 50), numpy.linspace(1.1, 0.9, 30), numpy.full(20, 1.1)])
    assert detect_change_points(eff) == [50, 80]
    assert change_metadata(eff) == ([50, 80], [30, 20])
    assert detect_change_points(numpy.linspace(1.0, 0.9, 100)) == []
    assert detect_change_points([1.0]) == []
