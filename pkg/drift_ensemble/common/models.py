from typing import List, Optional, Sequence

import numpy

INPUT_NAMES = (
    'compressor_inlet_temperature',
    'compressor_inlet_humidity',
    'ambient_pressure',
    'inlet_pressure_drop',
    'exhaust_pressure_drop',
    'inlet_guide_vane_angle',
    'fuel_temperature',
    'compressor_flow',
    'firing_temperature',
)
INPUT_COLUMNS = tuple(f"x{i + 1}" for i in range(len(INPUT_NAMES)))
OUTPUT_NAMES = ('power', 'heat_rate')

SUDDEN = 'sudden'
GRADUAL = 'gradual'
SERIES_KINDS = (SUDDEN, GRADUAL)


class Sample(object):
    """
    One stream record: index, input vector and target vector.
    """
    index: int
    x: numpy.ndarray
    y: numpy.ndarray

    def __init__(self, index: int, x, y):
        self.index = int(index)
        self.x = numpy.asarray(x, dtype=float)
        self.y = numpy.asarray(y, dtype=float)

    def __repr__(self):
        return f"<Sample index={self.index} x={self.x.tolist()} y={self.y.tolist()}>"

    def is_valid(self) -> bool:
        """
        Finite everywhere and no zero target (percentage errors are undefined at 0).
        """
        return bool(numpy.isfinite(self.x).all() and numpy.isfinite(self.y).all() and (self.y != 0).all())


class StreamRecord(Sample):
    """
    A generated record. The hidden efficiency is kept apart from the inputs
    and is only written to the side channel.
    """
    efficiency: Optional[float]

    def __init__(self, index: int, x, y, efficiency: Optional[float] = None):
        super().__init__(index, x, y)
        self.efficiency = efficiency

    def sample(self) -> Sample:
        return Sample(self.index, self.x, self.y)


class SeriesMeta(object):
    """
    One manifest row.
    """
    series_id: str
    kind: str
    seed: int
    change_points: List[int]
    change_ranges: List[int]

    def __init__(self, series_id: str, kind: str, seed: int, change_points: Sequence[int], change_ranges: Sequence[int]):
        if len(change_points) != len(change_ranges):
            raise ValueError("change_points and change_ranges must have the same length")
        self.series_id = series_id
        self.kind = kind
        self.seed = int(seed)
        self.change_points = [int(c) for c in change_points]
        self.change_ranges = [int(r) for r in change_ranges]

    def __repr__(self):
        return f"<SeriesMeta series_id='{self.series_id}' kind='{self.kind}' change_points={self.change_points}>"

    def serialize(self):
        return {
            "series_id": self.series_id,
            "kind": self.kind,
            "seed": self.seed,
            "change_points": ';'.join(str(c) for c in self.change_points),
            "change_ranges": ';'.join(str(r) for r in self.change_ranges),
        }
