"""
Percentage error metrics over prequential reports.

A report here is anything with `indices` (stream index of every scored step)
and `ape` (one row of per-output absolute percentage errors per scored step).
"""
from typing import List, NamedTuple, Optional, Sequence
import logging

import numpy

logger = logging.getLogger(__name__)

DEFAULT_LEAD = 100
DEFAULT_RECOVERY_HORIZON = 100
DEFAULT_JUMP = 0.05


def percentage_error(prediction, actual) -> numpy.ndarray:
    """
    abs((prediction - actual) / actual) * 100, per output.
    """
    prediction = numpy.asarray(prediction, dtype=float)
    actual = numpy.asarray(actual, dtype=float)
    return numpy.abs((prediction - actual) / actual) * 100.0


def mape(ape, mask: Optional[numpy.ndarray] = None) -> numpy.ndarray:
    """
    Per-output mean of the APE rows selected by `mask`; NaN when nothing is
    selected.
    """
    ape = numpy.asarray(ape, dtype=float)
    if ape.ndim == 1:
        ape = ape[:, None]
    if mask is not None:
        ape = ape[mask]
    if ape.shape[0] == 0:
        return numpy.full(ape.shape[1], numpy.nan)
    return ape.mean(axis=0)


def change_window_mask(
        indices,
        change_points: Sequence[int],
        change_ranges: Sequence[int],
        lead: int = DEFAULT_LEAD,
) -> numpy.ndarray:
    """
    Scored steps inside [cp - lead, cp + range) for any change point. Windows
    reaching outside the scored indices are clipped.
    """
    indices = numpy.asarray(indices)
    mask = numpy.zeros(indices.shape[0], dtype=bool)
    if indices.shape[0] == 0:
        return mask

    first, last = indices.min(), indices.max()
    for cp, rng in zip(change_points, change_ranges):
        start, end = cp - lead, cp + rng
        if start < first or end > last + 1:
            logger.warning("Change window [%d, %d) clipped to scored indices [%d, %d]", start, end, first, last)
        # cp + range itself is outside the window
        mask |= (indices >= start) & (indices < end)
    return mask


def change_window_mape(
        report,
        change_points: Sequence[int],
        change_ranges: Sequence[int],
        lead: int = DEFAULT_LEAD,
) -> numpy.ndarray:
    mask = change_window_mask(report.indices, change_points, change_ranges, lead)
    if not mask.any():
        logger.warning("No scored steps fall inside any change window")
    return mape(report.ape, mask)


class Recovery(NamedTuple):
    # per output; None means the error never dropped below the threshold
    steps: List[Optional[int]]
    max_ape: List[float]

    @property
    def recovered(self) -> bool:
        return all(s is not None for s in self.steps)


def recovery_time(
        report,
        change_point: int,
        threshold_pct: float = 1.0,
        horizon: int = DEFAULT_RECOVERY_HORIZON,
) -> Recovery:
    """
    Samples processed from the change point until the APE of each output first
    falls below `threshold_pct` (a sample below it at the change point counts
    as 1), plus the largest APE over the first `horizon` post-change steps.
    """
    indices = numpy.asarray(report.indices)
    ape = numpy.asarray(report.ape, dtype=float)
    if ape.ndim == 1:
        ape = ape[:, None]
    if indices.shape[0] == 0 or not indices.min() <= change_point <= indices.max():
        raise ValueError(f"Change point {change_point} is outside the scored range")

    after = indices >= change_point
    post_idx = indices[after]
    post_ape = ape[after]

    steps = []
    for j in range(ape.shape[1]):
        below = numpy.flatnonzero(post_ape[:, j] < threshold_pct)
        steps.append(int(post_idx[below[0]] - change_point + 1) if below.size else None)

    max_ape = post_ape[:horizon].max(axis=0)
    return Recovery(steps, [float(v) for v in max_ape])


def detect_change_points(efficiency, min_jump: float = DEFAULT_JUMP) -> List[int]:
    """
    Indices where the hidden efficiency changes by more than `min_jump` from
    one sample to the next.
    """
    efficiency = numpy.asarray(efficiency, dtype=float)
    if efficiency.shape[0] < 2:
        return []
    return [int(i) + 1 for i in numpy.flatnonzero(numpy.abs(numpy.diff(efficiency)) > min_jump)]


def change_metadata(efficiency, min_jump: float = DEFAULT_JUMP):
    """
    (change_points, change_ranges) recovered from an efficiency trace; each
    range runs to the next jump or the end of the trace.
    """
    points = detect_change_points(efficiency, min_jump)
    ends = points[1:] + [len(efficiency)]
    return points, [end - cp for cp, end in zip(points, ends)]
