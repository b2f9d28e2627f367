#!/usr/bin/env python3
"""
drift-ensemble command line: generate a synthetic corpus, evaluate one
algorithm on one stream, compare algorithms over a corpus and sweep ensemble
settings.
"""
from typing import Dict, List, Optional
import argparse
import logging
import os
import sys

import pandas as pd

from drift_ensemble.common.config import RunConfig, load_run_config
from drift_ensemble.common.errors import ConfigError, DriftEnsembleError, StorageError
from drift_ensemble.common.log_setup import init_logging, init_sentry
from drift_ensemble.common.utils import format_float, parse_values, provenance_line
from drift_ensemble.evaluate.corpus import (
    SWEEP_PARAMS,
    load_streams,
    parameter_sweep,
    report_row,
    run_corpus,
    write_table,
)
from drift_ensemble.evaluate.prequential import AlgorithmKind, AlgorithmSpec, prequential_run
from drift_ensemble.ingest.generate import generate_corpus

logger = logging.getLogger(__name__)


def _ensure_dir(path: str):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise StorageError(f"Unable to create output directory: {e.strerror}", path)


def _apply_common(cfg: RunConfig, args):
    cfg.override('run', 'master_seed', args.seed)
    cfg.override('run', 'output_dir', args.out)
    cfg.override('run', 'jobs', args.jobs)


def _apply_ensemble(cfg: RunConfig, args):
    cfg.override('ensemble', 'ws', args.ws)
    cfg.override('ensemble', 'delta', args.delta)
    cfg.override('ensemble', 'es', args.es)
    cfg.override('run', 'init_size', args.init_size)


def _ensemble_provenance(cfg: RunConfig) -> Dict[str, str]:
    return {
        'ws': str(cfg.get('ensemble', 'ws')),
        'delta': ';'.join(format_float(d) for d in cfg.get('ensemble', 'delta')),
        'es': str(cfg.get('ensemble', 'es')),
    }


def cmd_generate(cfg: RunConfig, args) -> int:
    cfg.override('corpus', 'sudden', args.sudden)
    cfg.override('corpus', 'gradual', args.gradual)
    cfg.override('corpus', 'length', args.length)
    cfg.override('surrogate', 'noise', args.noise)
    cfg.override('surrogate', 'outlier_prob', args.outlier_prob)
    cfg.validate()

    out_dir = cfg.get('run', 'output_dir')
    metas = generate_corpus(
        cfg.get('corpus', 'sudden'),
        cfg.get('corpus', 'gradual'),
        cfg.get('corpus', 'length'),
        cfg.get('run', 'master_seed'),
        cfg.surrogate_params(),
        out_dir=out_dir,
        jobs=cfg.get('run', 'jobs'),
    )

    print(f"{'output':<12}{out_dir}")
    print(f"{'master_seed':<12}{cfg.get('run', 'master_seed')}")
    print(f"{'series':<12}{len(metas)}")
    print(f"{'sudden':<12}{cfg.get('corpus', 'sudden')}")
    print(f"{'gradual':<12}{cfg.get('corpus', 'gradual')}")
    print(f"{'length':<12}{cfg.get('corpus', 'length')}")
    return 0


def _print_summary(summary: Dict[str, object]):
    width = max(len(k) for k in summary) + 2
    for k, v in summary.items():
        if isinstance(v, float):
            v = 'nan' if v != v else f"{v:.4f}"
        print(f"{k:<{width}}{v}")


def cmd_run(cfg: RunConfig, args) -> int:
    _apply_ensemble(cfg, args)
    cfg.validate()

    spec = AlgorithmSpec(AlgorithmKind.from_name(args.algorithm), cfg.ensemble_config())
    stream = load_streams(args.stream, no_efficiency=args.no_efficiency)[0]
    report = prequential_run(spec, stream.samples, cfg.init_size, stream.series_id)

    out_dir = cfg.get('run', 'output_dir')
    _ensure_dir(out_dir)
    steps_path = os.path.join(out_dir, f"{stream.series_id}.{spec.name}.steps.csv")
    report.to_csv(steps_path, provenance_line(
        cfg.get('run', 'master_seed'), series_id=stream.series_id, algorithm=spec.name, **_ensemble_provenance(cfg)))

    row = report_row(report, stream, cfg.get('run', 'lead'), cfg.get('run', 'recovery_threshold'))
    summary = {
        'series': stream.series_id,
        'algorithm': spec.name,
        'scored': len(report),
        'skipped': len(report.skipped),
    }
    summary.update({k: v for k, v in row.items() if k.startswith('mape')})
    summary['spawns'] = report.spawn_count
    summary['mean_size'] = row['mean_size']
    summary['max_size'] = int(report.sizes.max())
    if stream.change_points:
        summary.update({k: v for k, v in row.items() if k.startswith('window_mape')})
        if row['max_ape_after_change'] != row['max_ape_after_change']:
            # every change point fell inside the init block
            summary['recovery'] = 'not scored'
        elif row['recovery'] != row['recovery']:
            summary['recovery'] = 'not recovered'
        else:
            summary['recovery'] = int(row['recovery'])
        summary['max_ape_after_change'] = row['max_ape_after_change']
    summary['wall_time'] = report.wall_time
    summary['steps_csv'] = steps_path
    _print_summary(summary)

    if args.summary_csv:
        line = {k: v for k, v in summary.items() if k not in ('wall_time', 'steps_csv')}
        try:
            pd.DataFrame([line]).to_csv(
                args.summary_csv,
                mode='w',
                index=False,
                float_format='%.10g',
            )
        except OSError as e:
            raise StorageError(f"Unable to write summary: {e.strerror}", args.summary_csv)
    return 0


def _algorithm_specs(cfg: RunConfig, names: Optional[List[str]]) -> List[AlgorithmSpec]:
    kinds = [AlgorithmKind.from_name(n) for n in names] if names else list(AlgorithmKind)
    base = cfg.ensemble_config()
    return [AlgorithmSpec(k, base) for k in kinds]


def cmd_compare(cfg: RunConfig, args) -> int:
    _apply_ensemble(cfg, args)
    cfg.override('run', 'replicates', args.replicates)
    cfg.validate()

    specs = _algorithm_specs(cfg, args.algorithm)
    master_seed = cfg.get('run', 'master_seed')
    result = run_corpus(
        specs,
        args.corpus,
        replicates=cfg.get('run', 'replicates'),
        master_seed=master_seed,
        init_size=cfg.init_size,
        lead=cfg.get('run', 'lead'),
        threshold=cfg.get('run', 'recovery_threshold'),
        jobs=cfg.get('run', 'jobs'),
        no_efficiency=args.no_efficiency,
    )

    out_dir = cfg.get('run', 'output_dir')
    _ensure_dir(out_dir)
    header = provenance_line(master_seed, replicates=cfg.get('run', 'replicates'), **_ensemble_provenance(cfg))
    write_table(result.cells, os.path.join(out_dir, 'cells.csv'), header)
    write_table(result.aggregate, os.path.join(out_dir, 'aggregate.csv'), header)

    with pd.option_context('display.width', 120, 'display.max_columns', None):
        print(result.aggregate.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    if result.failures:
        logger.warning("%d cells failed; see cells.csv", result.failures)
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    _apply_ensemble(cfg, args)
    cfg.override('run', 'replicates', args.replicates)

    params = args.param or []
    values = args.values or []
    if not params:
        raise ConfigError("At least one --param is required")
    if len(params) != len(values):
        raise ConfigError("Every --param needs exactly one --values")
    grid = {}
    for name, text in zip(params, values):
        if name in grid:
            raise ConfigError(f"Sweep parameter '{name}' given twice")
        grid[name] = parse_values(text, str)

    cfg.validate()

    master_seed = cfg.get('run', 'master_seed')
    base = AlgorithmSpec(AlgorithmKind.from_name(args.algorithm), cfg.ensemble_config())
    streams = load_streams(args.path, no_efficiency=args.no_efficiency)
    table = parameter_sweep(
        grid,
        base,
        streams,
        replicates=cfg.get('run', 'replicates'),
        master_seed=master_seed,
        init_size=cfg.init_size,
        lead=cfg.get('run', 'lead'),
        threshold=cfg.get('run', 'recovery_threshold'),
        jobs=cfg.get('run', 'jobs'),
    )

    out_dir = cfg.get('run', 'output_dir')
    _ensure_dir(out_dir)
    write_table(table, os.path.join(out_dir, 'sweep.csv'), provenance_line(
        master_seed, algorithm=base.name, replicates=cfg.get('run', 'replicates'), **_ensemble_provenance(cfg)))

    print(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument('--config', help='YAML run config file')
    p.add_argument('--seed', type=int, help='Master seed')
    p.add_argument('--out', help='Output directory')
    p.add_argument('--jobs', type=int, help='Parallel workers')
    p.add_argument('--log-level', help='Log level (default from DRIFT_LOG_LEVEL)')


def _add_ensemble(p: argparse.ArgumentParser):
    p.add_argument('--ws', type=int, help='Window and reservoir size')
    p.add_argument('--delta', help='Spawn threshold(s) as fractional error, comma separated per output')
    p.add_argument('--es', type=int, help='Maximum ensemble size')
    p.add_argument('--init-size', type=int, help='Initial training block (default ws + largest hidden layer)')
    p.add_argument('--no-efficiency', action='store_true', help='Input has no t column and no efficiency side file')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='drift-ensemble', description='Online ELM ensembles for drifting regression streams')
    sub = parser.add_subparsers(dest='command', required=True)
    algorithms = [k.value for k in AlgorithmKind]

    p = sub.add_parser('generate', help='Generate a synthetic drift corpus')
    _add_common(p)
    p.add_argument('--sudden', type=int, help='Number of sudden-change series')
    p.add_argument('--gradual', type=int, help='Number of gradual-change series')
    p.add_argument('--length', type=int, help='Samples per series')
    p.add_argument('--noise', type=float, help='Output noise std as a fraction of nominal')
    p.add_argument('--outlier-prob', type=float, help='Probability of a zero-power row')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('run', help='Prequential run of one algorithm on one series')
    _add_common(p)
    _add_ensemble(p)
    p.add_argument('stream', help='Series CSV')
    p.add_argument('--algorithm', choices=algorithms, default=AlgorithmKind.DOER_MODIFIED.value)
    p.add_argument('--summary-csv', help='Write the summary as a one-row CSV to this file')
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('compare', help='Run algorithms over a corpus and aggregate per kind')
    _add_common(p)
    _add_ensemble(p)
    p.add_argument('corpus', help='Corpus directory with a manifest')
    p.add_argument('--algorithm', choices=algorithms, action='append', help='Algorithm to include (repeatable, default all)')
    p.add_argument('--replicates', type=int, help='Runs per series and algorithm')
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser('sweep', help='Sweep ensemble settings over a corpus or one series')
    _add_common(p)
    _add_ensemble(p)
    p.add_argument('path', help='Corpus directory or series CSV')
    p.add_argument('--param', action='append', choices=sorted(SWEEP_PARAMS), help='Setting to sweep (repeatable)')
    p.add_argument('--values', action='append', help='Comma separated values for the preceding --param')
    p.add_argument('--algorithm', choices=algorithms, default=AlgorithmKind.DOER_MODIFIED.value)
    p.add_argument('--replicates', type=int, help='Runs per series and value')
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    init_logging(args.log_level)
    init_sentry()

    try:
        cfg = load_run_config(args.config)
        _apply_common(cfg, args)
        return args.func(cfg, args)
    except DriftEnsembleError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
