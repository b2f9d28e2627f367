"""
Corpus-level experiments: every (series, algorithm, replicate) cell evaluated
prequentially, then reduced to per-kind tables, and parameter sweeps over the
ensemble settings.
"""
from typing import Any, Callable, Dict, List, Optional, Sequence
import concurrent.futures
import itertools
import logging
import os

import numpy
import pandas as pd

from drift_ensemble.common.errors import ConfigError, DriftEnsembleError, StorageError
from drift_ensemble.common.models import Sample, SeriesMeta
from drift_ensemble.common.tracing import start_span
from drift_ensemble.evaluate.metrics import DEFAULT_LEAD, change_metadata, change_window_mape, recovery_time
from drift_ensemble.evaluate.prequential import AlgorithmSpec, EvalReport, prequential_run
from drift_ensemble.ingest.series_io import MANIFEST_NAME, read_manifest, read_series, series_filename

logger = logging.getLogger(__name__)

# sweepable settings and the EnsembleConfig field each one sets
SWEEP_PARAMS: Dict[str, str] = {
    'ws': 'ws',
    'delta': 'delta',
    'es': 'max_size',
}
SWEEP_TYPES: Dict[str, Callable[[str], Any]] = {
    'ws': int,
    'delta': float,
    'es': int,
}


class Stream(object):
    """
    A loaded series with its change metadata.
    """
    series_id: str
    kind: str
    samples: List[Sample]
    change_points: List[int]
    change_ranges: List[int]

    def __init__(self, series_id: str, kind: str, samples: List[Sample], change_points=(), change_ranges=()):
        self.series_id = series_id
        self.kind = kind
        self.samples = samples
        self.change_points = list(change_points)
        self.change_ranges = list(change_ranges)

    def __repr__(self):
        return f"<Stream '{self.series_id}' kind='{self.kind}' samples={len(self.samples)}>"


def load_stream(path: str, meta: Optional[SeriesMeta] = None, no_efficiency: bool = False) -> Stream:
    """
    Change metadata comes from the manifest row when given, otherwise from the
    efficiency side file when there is one.
    """
    data = read_series(path, no_efficiency=no_efficiency)
    if meta is not None:
        return Stream(meta.series_id, meta.kind, data.samples, meta.change_points, meta.change_ranges)

    series_id = os.path.splitext(os.path.basename(path))[0]
    if data.efficiency is not None:
        points, ranges = change_metadata(data.efficiency)
        return Stream(series_id, '', data.samples, points, ranges)
    return Stream(series_id, '', data.samples)


def load_corpus(corpus_dir: str) -> List[SeriesMeta]:
    path = os.path.join(corpus_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        raise StorageError("No manifest found", path)
    return read_manifest(path)


def load_streams(path: str, no_efficiency: bool = False) -> List[Stream]:
    """
    Every series of a corpus directory, or the single series file at `path`.
    """
    if os.path.isdir(path):
        return [
            load_stream(os.path.join(path, series_filename(m.series_id)), m, no_efficiency)
            for m in load_corpus(path)
        ]
    return [load_stream(path, no_efficiency=no_efficiency)]


def report_row(report: EvalReport, stream: Stream, lead: int = DEFAULT_LEAD, threshold: float = 1.0) -> Dict[str, Any]:
    """
    Headline numbers of one run. The unsuffixed MAPE columns average the
    outputs.
    """
    row: Dict[str, Any] = {}
    whole = report.mape()
    row['mape'] = float(numpy.mean(whole))
    for name, v in zip(report.output_names, whole):
        row[f"mape_{name}"] = float(v)

    if stream.change_points:
        window = change_window_mape(report, stream.change_points, stream.change_ranges, lead)
    else:
        window = numpy.full(report.n_outputs, numpy.nan)
    row['window_mape'] = float(numpy.mean(window))
    for name, v in zip(report.output_names, window):
        row[f"window_mape_{name}"] = float(v)

    row['recovery'] = numpy.nan
    row['max_ape_after_change'] = numpy.nan
    scored = [cp for cp in stream.change_points if len(report) and report.indices[0] <= cp <= report.indices[-1]]
    if scored:
        rec = recovery_time(report, scored[0], threshold)
        if rec.recovered:
            row['recovery'] = max(rec.steps)
        row['max_ape_after_change'] = max(rec.max_ape)

    row['spawns'] = report.spawn_count
    row['mean_size'] = float(report.sizes.mean()) if len(report) else numpy.nan
    row['skipped'] = len(report.skipped)
    row['leaks'] = report.leaks
    return row


def _evaluate_cell(spec: AlgorithmSpec, stream: Stream, init_size: Optional[int], lead: int, threshold: float) -> Dict[str, Any]:
    report = prequential_run(spec, stream.samples, init_size, stream.series_id)
    return report_row(report, stream, lead, threshold)


def _corpus_cell(corpus_dir: str, meta: SeriesMeta, spec: AlgorithmSpec, replicate: int, init_size, lead, threshold, no_efficiency) -> Dict[str, Any]:
    row = {
        'series_id': meta.series_id,
        'kind': meta.kind,
        'algorithm': spec.name,
        'replicate': replicate,
        'seed': spec.seed,
        'error': '',
    }
    try:
        stream = load_stream(os.path.join(corpus_dir, series_filename(meta.series_id)), meta, no_efficiency)
        row.update(_evaluate_cell(spec, stream, init_size, lead, threshold))
    except (DriftEnsembleError, ValueError) as e:
        logger.exception("Cell %s/%s/%d failed", meta.series_id, spec.name, replicate)
        row['error'] = str(e)
    return row


def _sweep_cell(spec: AlgorithmSpec, stream: Stream, replicate: int, init_size, lead, threshold) -> Dict[str, Any]:
    row = {'series_id': stream.series_id, 'replicate': replicate, 'error': ''}
    try:
        row.update(_evaluate_cell(spec, stream, init_size, lead, threshold))
    except (DriftEnsembleError, ValueError) as e:
        logger.exception("Sweep cell %s/%d failed", stream.series_id, replicate)
        row['error'] = str(e)
    return row


def _run_tasks(fn, tasks: Sequence[tuple], jobs: int) -> List[Dict[str, Any]]:
    """
    Results in task order regardless of the number of workers.
    """
    if jobs <= 1:
        return [fn(*t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
        futures = [ex.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def aggregate_cells(cells: pd.DataFrame) -> pd.DataFrame:
    """
    Mean over replicates per (algorithm, series), then mean and population std
    across series per (kind, algorithm).
    """
    columns = ['kind', 'algorithm', 'n_series', 'failures',
               'window_mape_mean', 'window_mape_std', 'mape_mean', 'mape_std']
    if cells.empty:
        return pd.DataFrame(columns=columns)

    failures = (cells.assign(failed=cells['error'] != '')
                .groupby(['kind', 'algorithm'], sort=True)['failed'].sum()
                .astype(int))

    ok = cells[cells['error'] == '']
    if ok.empty:
        table = failures.rename('failures').to_frame()
        for c in columns[2:]:
            if c != 'failures':
                table[c] = numpy.nan
        table['n_series'] = 0
        return table.reset_index()[columns]

    per_series = (ok.groupby(['kind', 'algorithm', 'series_id'], sort=True)[['window_mape', 'mape']]
                  .mean()
                  .reset_index())
    grouped = per_series.groupby(['kind', 'algorithm'], sort=True)
    table = grouped.agg(
        n_series=('series_id', 'nunique'),
        window_mape_mean=('window_mape', 'mean'),
        mape_mean=('mape', 'mean'),
    )
    table['window_mape_std'] = grouped['window_mape'].std(ddof=0)
    table['mape_std'] = grouped['mape'].std(ddof=0)
    table = table.join(failures.rename('failures'), how='outer')
    table['failures'] = table['failures'].fillna(0).astype(int)
    table['n_series'] = table['n_series'].fillna(0).astype(int)
    return table.reset_index()[columns].sort_values(['kind', 'algorithm'], kind='mergesort').reset_index(drop=True)


class CorpusResult(object):
    cells: pd.DataFrame
    aggregate: pd.DataFrame

    def __init__(self, cells: pd.DataFrame, aggregate: pd.DataFrame):
        self.cells = cells
        self.aggregate = aggregate

    @property
    def failures(self) -> int:
        return int((self.cells['error'] != '').sum()) if not self.cells.empty else 0


def run_corpus(
        specs: Sequence[AlgorithmSpec],
        corpus_dir: str,
        replicates: int = 5,
        master_seed: int = 0,
        init_size: Optional[int] = None,
        lead: int = DEFAULT_LEAD,
        threshold: float = 1.0,
        jobs: int = 1,
        metas: Optional[Sequence[SeriesMeta]] = None,
        no_efficiency: bool = False,
) -> CorpusResult:
    """
    Replicate r of every algorithm runs with seed master_seed + r on the same
    stream. A series that cannot be read becomes a failed cell.
    """
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    if metas is None:
        metas = load_corpus(corpus_dir)

    tasks = [
        (corpus_dir, meta, spec.with_seed(master_seed + r), r, init_size, lead, threshold, no_efficiency)
        for meta in metas
        for spec in sorted(specs, key=lambda s: s.name)
        for r in range(replicates)
    ]
    with start_span('run_corpus') as span:
        span.set_attribute('cells', len(tasks))
        rows = _run_tasks(_corpus_cell, tasks, jobs)

    cells = pd.DataFrame(rows)
    if not cells.empty:
        cells = cells.sort_values(['series_id', 'algorithm', 'replicate'], kind='mergesort').reset_index(drop=True)
    result = CorpusResult(cells, aggregate_cells(cells))
    logger.info("Ran %d cells over %d series in %.1fs (%d failed)", len(tasks), len(metas), span.duration, result.failures)
    return result


def sweep_values(param: str, values: Sequence) -> List:
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"Unknown sweep parameter '{param}' (expected one of {', '.join(SWEEP_PARAMS)})")
    if not values:
        raise ConfigError(f"No values given for sweep parameter '{param}'")
    try:
        return [SWEEP_TYPES[param](v) for v in values]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for sweep parameter '{param}': {e}")


def sweep_grid(params: Dict[str, Sequence]) -> List[Dict[str, Any]]:
    """
    Cartesian product of the parameter values, first parameter varying slowest.
    """
    names = list(params)
    typed = [sweep_values(n, params[n]) for n in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*typed)]


def _sweep_spec(base: AlgorithmSpec, point: Dict[str, Any]) -> AlgorithmSpec:
    changes = {}
    for name, value in point.items():
        changes[SWEEP_PARAMS[name]] = (value,) if name == 'delta' else value
    return base.with_config(**changes)


def parameter_sweep(
        params: Dict[str, Sequence],
        base: AlgorithmSpec,
        streams: Sequence[Stream],
        replicates: int = 1,
        master_seed: int = 0,
        init_size: Optional[int] = None,
        lead: int = DEFAULT_LEAD,
        threshold: float = 1.0,
        jobs: int = 1,
) -> pd.DataFrame:
    """
    One row per grid point: MAPE averaged over replicates per series, then
    mean and population std across series. Infeasible points are kept with
    valid = False.
    """
    grid = sweep_grid(params)
    names = list(params)

    specs = []
    for point in grid:
        try:
            specs.append(_sweep_spec(base, point))
        except ConfigError as e:
            logger.warning("Sweep point %s is infeasible: %s", point, e)
            specs.append(None)

    tasks = []
    owners = []
    for i, spec in enumerate(specs):
        if spec is None:
            continue
        for stream in streams:
            for r in range(replicates):
                tasks.append((spec.with_seed(master_seed + r), stream, r, init_size, lead, threshold))
                owners.append(i)

    with start_span('parameter_sweep') as span:
        span.set_attribute('points', len(grid))
        results = _run_tasks(_sweep_cell, tasks, jobs)

    by_point: Dict[int, List[Dict[str, Any]]] = {}
    for i, row in zip(owners, results):
        by_point.setdefault(i, []).append(row)

    rows = []
    for i, point in enumerate(grid):
        row = dict(point)
        row['valid'] = specs[i] is not None
        cells = pd.DataFrame(by_point.get(i, []))
        ok = cells[cells['error'] == ''] if not cells.empty else cells
        row['n_runs'] = len(ok)
        row['failures'] = len(cells) - len(ok)
        for metric in ('mape', 'window_mape'):
            if ok.empty:
                row[f"{metric}_mean"] = numpy.nan
                row[f"{metric}_std"] = numpy.nan
                continue
            per_series = ok.groupby('series_id', sort=True)[metric].mean()
            row[f"{metric}_mean"] = float(per_series.mean())
            row[f"{metric}_std"] = float(per_series.std(ddof=0))
        rows.append(row)

    return pd.DataFrame(rows, columns=names + ['valid', 'n_runs', 'failures', 'mape_mean', 'mape_std',
                                               'window_mape_mean', 'window_mape_std'])


def write_table(table: pd.DataFrame, path: str, provenance: str):
    try:
        with open(path, 'w', encoding='utf8', newline='') as f:
            f.write(provenance)
            table.to_csv(f, index=False, float_format='%.10g')
    except OSError as e:
        raise StorageError(f"Unable to write table: {e.strerror}", path)
