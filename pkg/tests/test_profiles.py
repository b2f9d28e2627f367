import numpy
import pytest

from drift_ensemble.common.models import GRADUAL, SUDDEN
from drift_ensemble.ingest.profiles import (
    MAX_EFFICIENCY,
    MIN_EFFICIENCY,
    DriftProfile,
    Segment,
    SegmentKind,
    build_profile,
)


@pytest.mark.parametrize('kind', [SUDDEN, GRADUAL])
def test_profile_covers_series(kind):
    for seed in range(25):
        profile = build_profile(kind, 2000, seed)
        eff = profile.values()
        assert profile.length == 2000
        assert eff.shape == (2000,)
        assert eff.min() >= MIN_EFFICIENCY
        assert eff.max() <= MAX_EFFICIENCY
        assert len(profile.change_points) == len(profile.change_ranges)


def test_sudden_profile_shape():
    for seed in range(25):
        profile = build_profile(SUDDEN, 2000, seed)
        eff = profile.values()
        first, second = profile.change_points
        decline = profile.segments[-1].length
        assert 200 <= first <= 300
        assert 100 <= second - first <= 160
        assert 50 <= decline <= 80
        assert profile.change_ranges == [second - first, 2000 - second]

        assert eff[0] == 1.0
        assert eff[first - 1] == pytest.approx(0.9)
        assert eff[first] == pytest.approx(1.1)
        assert eff[second - 1] == pytest.approx(0.9)
        numpy.testing.assert_array_equal(eff[second:2000 - decline], 1.1)
        assert eff[-1] == pytest.approx(0.95)
        # the only jumps are at the two change points
        jumps = numpy.flatnonzero(numpy.abs(numpy.diff(eff)) > 0.05) + 1
        assert jumps.tolist() == [first, second]


def test_sudden_profile_is_mostly_stable():
    # the hold at 1.1 covers most of the series, ramps stay early and short
    for seed in range(25):
        profile = build_profile(SUDDEN, 2000, seed)
        eff = profile.values()
        _, second = profile.change_points
        assert second <= 460
        assert (eff == 1.1).mean() >= 0.7


def test_sudden_profile_at_minimum_length():
    for seed in range(25):
        profile = build_profile(SUDDEN, 200, seed)
        eff = profile.values()
        jumps = numpy.flatnonzero(numpy.abs(numpy.diff(eff)) > 0.05) + 1
        assert jumps.tolist() == profile.change_points
        assert eff[-1] == pytest.approx(0.95)


def test_gradual_profile_shape():
    for seed in range(25):
        profile = build_profile(GRADUAL, 2000, seed)
        eff = profile.values()
        (cp,), (wear,) = profile.change_points, profile.change_ranges
        assert 400 <= cp <= 800
        assert 400 <= wear <= 800

        numpy.testing.assert_array_equal(eff[:cp], 1.0)
        assert (numpy.diff(eff[cp:cp + wear]) < 0).all()
        numpy.testing.assert_array_equal(eff[cp + wear:], 0.9)
        assert numpy.abs(numpy.diff(eff)).max() < 0.05


def test_profile_is_deterministic():
    assert build_profile(SUDDEN, 1000, 5) == build_profile(SUDDEN, 1000, 5)
    assert build_profile(SUDDEN, 1000, 5) != build_profile(GRADUAL, 1000, 5)


def test_build_profile_errors():
    with pytest.raises(ValueError):
        build_profile(SUDDEN, 199, 0)
    with pytest.raises(ValueError):
        build_profile('cyclic', 1000, 0)


def test_profile_rejects_out_of_range_level():
    with pytest.raises(ValueError):
        DriftProfile(GRADUAL, [Segment(10, SegmentKind.HOLD, 0.8, 0.8)], [], [])
    with pytest.raises(ValueError):
        DriftProfile(SUDDEN, [Segment(3, SegmentKind.JUMP, 1.0, 1.1)], [], [])


def test_ramp_includes_both_ends():
    values = Segment(5, SegmentKind.LINEAR_RAMP, 1.0, 0.9).values()
    numpy.testing.assert_allclose(values, [1.0, 0.975, 0.95, 0.925, 0.9])
    assert Segment(0, SegmentKind.JUMP, 0.9, 1.1).values().shape == (0,)
