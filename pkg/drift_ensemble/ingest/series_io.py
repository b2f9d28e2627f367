"""
CSV formats of the corpus: series files, efficiency side files and the
manifest. Every file starts with a `#` provenance line; readers skip comment
lines wherever they appear.
"""
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple
import csv
import logging
import os

import numpy

from drift_ensemble.common.errors import DataError, StorageError
from drift_ensemble.common.models import INPUT_COLUMNS, OUTPUT_NAMES, Sample, SeriesMeta, StreamRecord

logger = logging.getLogger(__name__)

SERIES_HEADER = ['t', *INPUT_COLUMNS, *OUTPUT_NAMES]
EFFICIENCY_HEADER = ['t', 'efficiency']
MANIFEST_HEADER = ['series_id', 'kind', 'seed', 'change_points', 'change_ranges']
MANIFEST_NAME = 'manifest.csv'


def _fmt(v: float) -> str:
    return f"{v:.8g}"


def series_filename(series_id: str) -> str:
    return f"{series_id}.csv"


def efficiency_path(series_path: str) -> str:
    root, _ = os.path.splitext(series_path)
    return root + '.eff.csv'


def _write_rows(path: str, provenance: str, header: Sequence[str], rows: Iterable[Sequence]):
    try:
        with open(path, 'w', encoding='utf8', newline='') as f:
            f.write(provenance)
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise StorageError(f"Unable to write file: {e.strerror}", path)


def write_series(path: str, records: Sequence[StreamRecord], provenance: str):
    _write_rows(path, provenance, SERIES_HEADER, (
        [r.index, *[_fmt(v) for v in r.x], *[_fmt(v) for v in r.y]]
        for r in records
    ))


def write_efficiency(path: str, records: Sequence[StreamRecord], provenance: str):
    _write_rows(path, provenance, EFFICIENCY_HEADER, (
        [r.index, _fmt(r.efficiency)]
        for r in records
    ))


def write_manifest(path: str, metas: Sequence[SeriesMeta], provenance: str):
    _write_rows(path, provenance, MANIFEST_HEADER, (
        [m.serialize()[k] for k in MANIFEST_HEADER]
        for m in metas
    ))


def _rows(path: str) -> Iterator[Tuple[int, List[str]]]:
    """
    (line number, fields) of every non-comment, non-blank line.
    """
    try:
        with open(path, 'r', encoding='utf8', newline='') as f:
            for line_no, line in enumerate(f, 1):
                stripped = line.strip()
                if not stripped or stripped.startswith('#'):
                    continue
                yield line_no, next(csv.reader([stripped]))
    except OSError as e:
        raise StorageError(f"Unable to read file: {e.strerror}", path)


def _is_header(fields: List[str]) -> bool:
    try:
        float(fields[0])
        return False
    except ValueError:
        return True


def _check_header(path: str, line_no: int, fields: List[str], accepted: Sequence[Sequence[str]]):
    if [f.strip() for f in fields] not in [list(a) for a in accepted]:
        raise DataError(f"{path}: unexpected header {fields}", line_no)


class SeriesData(object):
    path: str
    samples: List[Sample]
    dropped_lines: List[int]
    efficiency: Optional[numpy.ndarray]

    def __init__(self, path: str, samples: List[Sample], dropped_lines: List[int], efficiency: Optional[numpy.ndarray] = None):
        self.path = path
        self.samples = samples
        self.dropped_lines = dropped_lines
        self.efficiency = efficiency

    def __len__(self):
        return len(self.samples)

    def __repr__(self):
        return f"<SeriesData path='{self.path}' samples={len(self.samples)} dropped={len(self.dropped_lines)}>"


def read_series(path: str, no_efficiency: bool = False) -> SeriesData:
    """
    Parse a series file. Rows with an empty field are dropped; malformed rows
    raise DataError with their line number. With `no_efficiency` 11-column
    rows without `t` are accepted and the efficiency side file is ignored.
    """
    widths = (len(SERIES_HEADER), len(SERIES_HEADER) - 1) if no_efficiency else (len(SERIES_HEADER),)
    n_inputs = len(INPUT_COLUMNS)

    samples = []
    dropped = []
    first = True
    for line_no, fields in _rows(path):
        if first:
            first = False
            if _is_header(fields):
                _check_header(path, line_no, fields, [SERIES_HEADER, SERIES_HEADER[1:]][:len(widths)])
                continue

        if len(fields) not in widths:
            raise DataError(f"{path}: expected {' or '.join(str(w) for w in widths)} columns, got {len(fields)}", line_no)
        if any(not f.strip() for f in fields):
            dropped.append(line_no)
            continue

        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise DataError(f"{path}: non-numeric value in {fields}", line_no)

        if len(fields) == len(SERIES_HEADER):
            if not values[0].is_integer():
                raise DataError(f"{path}: index {fields[0]} is not an integer", line_no)
            index, values = int(values[0]), values[1:]
        else:
            index = len(samples) + len(dropped)
        samples.append(Sample(index, values[:n_inputs], values[n_inputs:]))

    if dropped:
        logger.info("%s: dropped %d rows with missing values", path, len(dropped))

    efficiency = None
    if not no_efficiency:
        eff_path = efficiency_path(path)
        if os.path.exists(eff_path):
            efficiency = read_efficiency(eff_path)
        else:
            logger.debug("No efficiency side file for %s", path)

    return SeriesData(path, samples, dropped, efficiency)


def read_efficiency(path: str) -> numpy.ndarray:
    """
    Efficiency values ordered by `t`.
    """
    pairs = []
    first = True
    for line_no, fields in _rows(path):
        if first:
            first = False
            if _is_header(fields):
                _check_header(path, line_no, fields, [EFFICIENCY_HEADER])
                continue
        if len(fields) != 2:
            raise DataError(f"{path}: expected 2 columns, got {len(fields)}", line_no)
        try:
            pairs.append((int(fields[0]), float(fields[1])))
        except ValueError:
            raise DataError(f"{path}: malformed row {fields}", line_no)
    pairs.sort()
    return numpy.array([v for _, v in pairs])


def read_manifest(path: str) -> List[SeriesMeta]:
    metas = []
    first = True
    for line_no, fields in _rows(path):
        if first:
            first = False
            if fields and fields[0].strip() == 'series_id':
                # older manifests have no change_ranges column
                _check_header(path, line_no, fields, [MANIFEST_HEADER, MANIFEST_HEADER[:-1]])
                continue
        if len(fields) not in (len(MANIFEST_HEADER), len(MANIFEST_HEADER) - 1):
            raise DataError(f"{path}: expected {len(MANIFEST_HEADER)} columns, got {len(fields)}", line_no)
        try:
            change_points = [int(v) for v in fields[3].split(';') if v.strip()]
            if len(fields) == len(MANIFEST_HEADER):
                change_ranges = [int(v) for v in fields[4].split(';') if v.strip()]
            else:
                change_ranges = [0] * len(change_points)
            metas.append(SeriesMeta(fields[0].strip(), fields[1].strip(), int(fields[2]), change_points, change_ranges))
        except ValueError as e:
            raise DataError(f"{path}: malformed manifest row ({e})", line_no)
    return metas
