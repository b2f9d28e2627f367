"""
Hidden compressor efficiency profiles.

The efficiency is never an input to any model; it is the concept that drifts.
A profile is an ordered list of segments whose timing is drawn per seed while
the levels are fixed.
"""
from typing import List, NamedTuple
import enum
import logging

import numpy

from drift_ensemble.common.models import GRADUAL, SERIES_KINDS, SUDDEN

logger = logging.getLogger(__name__)

MIN_EFFICIENCY = 0.85
MAX_EFFICIENCY = 1.15
MIN_LENGTH = 200


class SegmentKind(enum.Enum):
    HOLD = 'hold'
    LINEAR_RAMP = 'ramp'
    # instantaneous level change, covers no samples
    JUMP = 'jump'


class Segment(NamedTuple):
    length: int
    kind: SegmentKind
    start_eff: float
    end_eff: float

    def values(self) -> numpy.ndarray:
        if self.kind == SegmentKind.JUMP:
            return numpy.empty(0)
        if self.kind == SegmentKind.HOLD:
            return numpy.full(self.length, self.start_eff)
        # start and end levels both included
        return numpy.linspace(self.start_eff, self.end_eff, self.length)


class DriftProfile(object):
    kind: str
    segments: List[Segment]
    change_points: List[int]
    change_ranges: List[int]

    def __init__(self, kind: str, segments: List[Segment], change_points: List[int], change_ranges: List[int]):
        for s in segments:
            if not (MIN_EFFICIENCY <= s.start_eff <= MAX_EFFICIENCY and MIN_EFFICIENCY <= s.end_eff <= MAX_EFFICIENCY):
                raise ValueError(f"Efficiency outside [{MIN_EFFICIENCY}, {MAX_EFFICIENCY}] in {s}")
            if s.kind == SegmentKind.JUMP and s.length != 0:
                raise ValueError("Jump segments cover no samples")
        self.kind = kind
        self.segments = list(segments)
        self.change_points = list(change_points)
        self.change_ranges = list(change_ranges)

    @property
    def length(self) -> int:
        return sum(s.length for s in self.segments)

    def values(self) -> numpy.ndarray:
        return numpy.concatenate([s.values() for s in self.segments])

    def __eq__(self, other):
        if not isinstance(other, DriftProfile):
            return NotImplemented
        return self.kind == other.kind and self.segments == other.segments

    def __repr__(self):
        return f"<DriftProfile kind='{self.kind}' length={self.length} change_points={self.change_points}>"


def _draw(rng: numpy.random.Generator, T: int, lo: float, hi: float) -> int:
    return int(rng.integers(int(lo * T), int(hi * T) + 1))


def _sudden(T: int, rng: numpy.random.Generator) -> DriftProfile:
    # a chunk of a long trajectory: degrade, water wash, degrade again and a
    # second wash early on, then a long stable stretch and a short decline
    degrade = _draw(rng, T, 0.10, 0.15)
    second = _draw(rng, T, 0.05, 0.08)
    decline = _draw(rng, T, 0.025, 0.04)
    stable = T - degrade - second - decline

    segments = [
        Segment(degrade, SegmentKind.LINEAR_RAMP, 1.0, 0.9),
        Segment(0, SegmentKind.JUMP, 0.9, 1.1),
        Segment(second, SegmentKind.LINEAR_RAMP, 1.1, 0.9),
        Segment(0, SegmentKind.JUMP, 0.9, 1.1),
        Segment(stable, SegmentKind.HOLD, 1.1, 1.1),
        Segment(decline, SegmentKind.LINEAR_RAMP, 1.1, 0.95),
    ]
    first_cp = degrade
    second_cp = degrade + second
    return DriftProfile(SUDDEN, segments, [first_cp, second_cp], [second, T - second_cp])


def _gradual(T: int, rng: numpy.random.Generator) -> DriftProfile:
    steady = _draw(rng, T, 0.2, 0.4)
    wear = _draw(rng, T, 0.2, 0.4)
    segments = [
        Segment(steady, SegmentKind.HOLD, 1.0, 1.0),
        Segment(wear, SegmentKind.LINEAR_RAMP, 1.0, 0.9),
        Segment(T - steady - wear, SegmentKind.HOLD, 0.9, 0.9),
    ]
    return DriftProfile(GRADUAL, segments, [steady], [wear])


def build_profile(kind: str, T: int, seed: int) -> DriftProfile:
    if T < MIN_LENGTH:
        raise ValueError(f"Series length {T} is too short for a drift profile (minimum {MIN_LENGTH})")

    if kind not in SERIES_KINDS:
        raise ValueError(f"Unknown series kind '{kind}', expected one of {SERIES_KINDS}")

    rng = numpy.random.default_rng(seed)
    profile = _sudden(T, rng) if kind == SUDDEN else _gradual(T, rng)

    logger.debug("Built %r", profile)
    return profile
