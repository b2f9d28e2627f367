"""
Short-term and long-term data memories, and the distance-based choice of
training data for a newly created model.
"""
from typing import Iterator, List, Optional
import collections
import logging
import random

import numpy

from drift_ensemble.common.models import Sample

logger = logging.getLogger(__name__)


class SlidingWindow(object):
    """
    The most recent `capacity` samples, oldest first.
    """
    capacity: int

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("Window capacity must be >= 1")
        self.capacity = capacity
        self._entries = collections.deque(maxlen=capacity)

    def push(self, sample: Sample) -> 'SlidingWindow':
        self._entries.append(sample)
        return self

    @property
    def entries(self) -> List[Sample]:
        return list(self._entries)

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self._entries)


class Reservoir(object):
    """
    Uniform reservoir sample of everything offered so far. The first
    `capacity` offers are always kept; offer t > capacity is kept with
    probability capacity / t (always, when pinned) and replaces a uniformly
    chosen entry. Pinning only affects insertion: a pinned entry can be
    replaced by a later offer like any other.
    """
    capacity: int
    stream_count: int

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("Reservoir capacity must be >= 1")
        self.capacity = capacity
        self.stream_count = 0
        self._rng = random.Random(seed)
        self._entries: List[Sample] = []
        self._pinned: List[bool] = []

    def offer(self, sample: Sample, pinned: bool = False) -> bool:
        """
        Returns whether the sample was stored.
        """
        self.stream_count += 1
        if len(self._entries) < self.capacity:
            self._entries.append(sample)
            self._pinned.append(pinned)
            return True

        if not pinned and self._rng.random() >= self.capacity / self.stream_count:
            return False

        victim = self._rng.randrange(self.capacity)
        self._entries[victim] = sample
        self._pinned[victim] = pinned
        return True

    @property
    def entries(self) -> List[Sample]:
        return list(self._entries)

    @property
    def pinned(self) -> List[bool]:
        return list(self._pinned)

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self._entries)

    def __contains__(self, sample: Sample) -> bool:
        return any(s.index == sample.index for s in self._entries)


class DistanceWeights(object):
    """
    Non-negative weights over the extended vector z = (x, y).
    """
    W: numpy.ndarray

    def __init__(self, W):
        W = numpy.asarray(W, dtype=float)
        if W.ndim != 1 or (W <= 0).any():
            raise ValueError("Distance weights must be a vector of positive values")
        self.W = W

    @classmethod
    def for_dims(cls, n_inputs: int, n_outputs: int, output_weight: float = 5.0) -> 'DistanceWeights':
        return cls(numpy.concatenate([numpy.ones(n_inputs), numpy.full(n_outputs, output_weight)]))

    def __len__(self):
        return len(self.W)


def extended(sample: Sample) -> numpy.ndarray:
    return numpy.concatenate([sample.x, sample.y])


def weighted_distance(z_t, z_j, W: DistanceWeights) -> float:
    """
    sum_k W_k (z_t[k] - z_j[k])^2
    """
    z_t = numpy.asarray(z_t, dtype=float)
    z_j = numpy.asarray(z_j, dtype=float)
    if z_t.shape != z_j.shape or z_t.shape != W.W.shape:
        raise ValueError(f"Dimension mismatch: {z_t.shape}, {z_j.shape}, weights {W.W.shape}")
    return float(W.W @ (z_t - z_j) ** 2)


def candidate_set(stm: SlidingWindow, ltm: Optional[Reservoir], current: Sample) -> List[Sample]:
    """
    D_S then D_L, each stored point once, never the current point itself.
    """
    seen = {current.index}
    candidates = []
    for memory in (stm, ltm or ()):
        for s in memory:
            if s.index not in seen:
                seen.add(s.index)
                candidates.append(s)
    return candidates


def select_training_set(
        stm: SlidingWindow,
        ltm: Optional[Reservoir],
        current: Sample,
        W: DistanceWeights,
        ws: int,
) -> List[Sample]:
    """
    Training data for a new model: the current sample plus every candidate
    closer than tau = mean - std of the candidate distances. While that is
    fewer than ws points the nearest remaining candidates are added, so the
    result can be larger than ws but never smaller than min(ws, |D_C| + 1).
    With a degenerate tau (std 0 or tau <= 0) only the distance order is used.
    """
    candidates = candidate_set(stm, ltm, current)
    selected = [current]
    if not candidates or ws <= 1:
        return selected[:max(ws, 1)]

    z_t = extended(current)
    Z = numpy.stack([extended(s) for s in candidates])
    distances = ((Z - z_t) ** 2) @ W.W

    std = distances.std()
    tau = distances.mean() - std

    order = numpy.argsort(distances, kind='stable')
    if std > 0 and tau > 0:
        n_below = int(numpy.count_nonzero(distances < tau))
    else:
        logger.debug("Degenerate distance threshold (tau=%.4g, std=%.4g); selecting by distance", tau, std)
        n_below = 0

    # order is ascending, so the below-tau points are its prefix
    n_taken = max(n_below, ws - 1)
    selected.extend(candidates[i] for i in order[:n_taken])
    return selected
