"""
Synthetic series and corpus generation.
"""
import concurrent.futures
from typing import List, Optional, Tuple
import logging
import os

import numpy

from drift_ensemble.common.errors import StorageError
from drift_ensemble.common.models import SUDDEN, GRADUAL, SeriesMeta, StreamRecord
from drift_ensemble.common.tracing import start_span
from drift_ensemble.common.utils import derive_seed, provenance_line
from drift_ensemble.ingest.profiles import DriftProfile, build_profile
from drift_ensemble.ingest.series_io import (
    MANIFEST_NAME,
    efficiency_path,
    series_filename,
    write_efficiency,
    write_manifest,
    write_series,
)
from drift_ensemble.ingest.surrogate import SurrogateParams, gen_inputs, plant_surrogate

logger = logging.getLogger(__name__)

# independent seed streams of one series
PROFILE_STREAM = 0
INPUT_STREAM = 1
NOISE_STREAM = 2


def series_profile(kind: str, T: int, seed: int) -> DriftProfile:
    return build_profile(kind, T, derive_seed(seed, PROFILE_STREAM))


def generate_series(kind: str, T: int, seed: int, params: Optional[SurrogateParams] = None) -> List[StreamRecord]:
    """
    T records: profile efficiency, plant inputs and surrogate outputs, with
    zero-power outliers injected at `params.outlier_prob`.
    """
    if params is None:
        params = SurrogateParams()

    eff = series_profile(kind, T, seed).values()
    X = gen_inputs(T, derive_seed(seed, INPUT_STREAM))
    noise_rng = numpy.random.default_rng(derive_seed(seed, NOISE_STREAM))
    power, heat_rate = plant_surrogate(X, eff, params, noise_rng)

    outliers = noise_rng.random(T) < params.outlier_prob
    power = numpy.where(outliers, 0.0, power)
    if outliers.any():
        logger.debug("Injected %d zero-power outliers", int(outliers.sum()))

    return [
        StreamRecord(t, X[t], (power[t], heat_rate[t]), efficiency=float(eff[t]))
        for t in range(T)
    ]


def series_seeds(master_seed: int, n: int) -> List[int]:
    return [int(s) for s in numpy.random.SeedSequence(master_seed).generate_state(n)] if n else []


def corpus_plan(n_sudden: int, n_gradual: int, master_seed: int) -> List[Tuple[str, str, int]]:
    """
    (series_id, kind, seed) for every series, sudden ones first.
    """
    if n_sudden < 0 or n_gradual < 0:
        raise ValueError("Series counts must be >= 0")
    kinds = [SUDDEN] * n_sudden + [GRADUAL] * n_gradual
    seeds = series_seeds(master_seed, len(kinds))
    return [(f"series_{i:04d}", kind, seed) for i, (kind, seed) in enumerate(zip(kinds, seeds))]


def _write_one(out_dir: str, series_id: str, kind: str, seed: int, T: int, master_seed: int, params: SurrogateParams) -> SeriesMeta:
    records = generate_series(kind, T, seed, params)
    profile = series_profile(kind, T, seed)
    path = os.path.join(out_dir, series_filename(series_id))
    header = provenance_line(master_seed, series_id=series_id, kind=kind, seed=seed)
    write_series(path, records, header)
    write_efficiency(efficiency_path(path), records, header)
    return SeriesMeta(series_id, kind, seed, profile.change_points, profile.change_ranges)


def generate_corpus(
        n_sudden: int,
        n_gradual: int,
        T: int,
        master_seed: int,
        params: Optional[SurrogateParams] = None,
        out_dir: str = 'corpus',
        jobs: int = 1,
) -> List[SeriesMeta]:
    """
    Write every series, its efficiency side file and the manifest to
    `out_dir`. Output is identical for any number of jobs.
    """
    if params is None:
        params = SurrogateParams()
    plan = corpus_plan(n_sudden, n_gradual, master_seed)

    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise StorageError(f"Unable to create output directory: {e.strerror}", out_dir)

    with start_span('generate_corpus') as span:
        span.set_attribute('series', len(plan))
        with concurrent.futures.ThreadPoolExecutor(max_workers=max(jobs, 1)) as ex:
            futures = [
                ex.submit(_write_one, out_dir, series_id, kind, seed, T, master_seed, params)
                for series_id, kind, seed in plan
            ]
            metas = [f.result() for f in futures]

        write_manifest(
            os.path.join(out_dir, MANIFEST_NAME),
            metas,
            provenance_line(master_seed, sudden=n_sudden, gradual=n_gradual, length=T),
        )

    logger.info("Generated %d series (%d sudden, %d gradual, T=%d) in %s",
                len(metas), n_sudden, n_gradual, T, out_dir)
    return metas
