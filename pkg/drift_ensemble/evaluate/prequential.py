"""
Test-then-train evaluation of one algorithm over one stream.
"""
from typing import List, Optional, Sequence
import csv
import enum
import logging

import numpy

from drift_ensemble.analysis.baselines import build_sequential_elm, build_static_elm
from drift_ensemble.analysis.ensemble import EnsembleConfig, MemoryMode, StepTrace, init_ensemble
from drift_ensemble.common.errors import StorageError
from drift_ensemble.common.models import OUTPUT_NAMES, Sample
from drift_ensemble.common.tracing import start_span
from drift_ensemble.common.utils import format_float
from drift_ensemble.evaluate.metrics import mape

logger = logging.getLogger(__name__)


class AlgorithmKind(enum.Enum):
    STATIC_ELM = 'static-elm'
    OS_ELM = 'os-elm'
    DOER_ORIGINAL = 'doer-original'
    DOER_MODIFIED = 'doer-modified'

    @classmethod
    def from_name(cls, name: str) -> 'AlgorithmKind':
        for kind in cls:
            if kind.value == name or kind.name.lower() == name.lower():
                return kind
        raise ValueError(f"Unknown algorithm '{name}' (expected one of {', '.join(k.value for k in cls)})")


class AlgorithmSpec(object):
    kind: AlgorithmKind
    config: EnsembleConfig

    def __init__(self, kind: AlgorithmKind, config: EnsembleConfig):
        if kind == AlgorithmKind.DOER_ORIGINAL and config.memory_mode != MemoryMode.STM_ONLY:
            config = config.replace(memory_mode=MemoryMode.STM_ONLY)
        elif kind == AlgorithmKind.DOER_MODIFIED and config.memory_mode != MemoryMode.STM_PLUS_LTM:
            config = config.replace(memory_mode=MemoryMode.STM_PLUS_LTM)
        self.kind = kind
        self.config = config

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def seed(self) -> int:
        return self.config.seed

    def with_seed(self, seed: int) -> 'AlgorithmSpec':
        return AlgorithmSpec(self.kind, self.config.replace(seed=seed))

    def with_config(self, **changes) -> 'AlgorithmSpec':
        return AlgorithmSpec(self.kind, self.config.replace(**changes))

    def build(self, init_data: Sequence[Sample]):
        if self.kind == AlgorithmKind.STATIC_ELM:
            return build_static_elm(init_data, self.config)
        if self.kind == AlgorithmKind.OS_ELM:
            return build_sequential_elm(init_data, self.config)
        return init_ensemble(init_data, self.config)

    def __repr__(self):
        return f"<AlgorithmSpec {self.name} {self.config!r}>"


def default_init_size(cfg: EnsembleConfig) -> int:
    return cfg.ws + cfg.largest_hidden


def output_names(n_outputs: int) -> List[str]:
    if n_outputs == len(OUTPUT_NAMES):
        return list(OUTPUT_NAMES)
    return [f"y{j + 1}" for j in range(n_outputs)]


class EvalReport(object):
    algorithm: str
    series_id: str
    indices: numpy.ndarray
    predictions: numpy.ndarray
    actuals: numpy.ndarray
    ape: numpy.ndarray
    sizes: numpy.ndarray
    spawns: numpy.ndarray
    init_indices: List[int]
    skipped: List[int]
    leaks: int
    wall_time: float

    def __init__(self, algorithm: str, series_id: str, traces: Sequence[StepTrace], init_indices: List[int], skipped: List[int], leaks: int = 0, wall_time: float = 0.0):
        self.algorithm = algorithm
        self.series_id = series_id
        self.indices = numpy.array([t.index for t in traces], dtype=int)
        self.predictions = numpy.array([t.prediction for t in traces], dtype=float)
        self.actuals = numpy.array([t.actual for t in traces], dtype=float)
        self.ape = numpy.array([t.ape for t in traces], dtype=float)
        self.sizes = numpy.array([t.size for t in traces], dtype=int)
        self.spawns = numpy.array([t.spawned for t in traces], dtype=bool)
        self.init_indices = list(init_indices)
        self.skipped = list(skipped)
        self.leaks = leaks
        self.wall_time = wall_time

    def __len__(self):
        return self.indices.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.ape.shape[1] if self.ape.ndim == 2 else 0

    @property
    def output_names(self) -> List[str]:
        return output_names(self.n_outputs)

    def mape(self) -> numpy.ndarray:
        """
        Whole-stream MAPE per output over every scored step.
        """
        return mape(self.ape)

    @property
    def spawn_count(self) -> int:
        return int(self.spawns.sum())

    def serialize(self):
        return {
            "algorithm": self.algorithm,
            "series_id": self.series_id,
            "scored": len(self),
            "init": len(self.init_indices),
            "skipped": len(self.skipped),
            "spawns": self.spawn_count,
            "mean_size": float(self.sizes.mean()) if len(self) else float('nan'),
            "max_size": int(self.sizes.max()) if len(self) else 0,
            "mape": {n: float(v) for n, v in zip(self.output_names, self.mape())},
            "leaks": self.leaks,
        }

    def to_csv(self, path: str, provenance: str):
        """
        One row per scored step. Wall time is left out so reruns are identical.
        """
        try:
            with open(path, 'w', encoding='utf8', newline='') as f:
                f.write(provenance)
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(StepTrace.header(self.output_names))
                for i in range(len(self)):
                    writer.writerow(
                        [int(self.indices[i])]
                        + [format_float(v) for v in self.predictions[i]]
                        + [format_float(v) for v in self.actuals[i]]
                        + [format_float(v) for v in self.ape[i]]
                        + [int(self.sizes[i]), int(self.spawns[i])]
                    )
        except OSError as e:
            raise StorageError(f"Unable to write report: {e.strerror}", path)

    def __repr__(self):
        return f"<EvalReport algorithm='{self.algorithm}' series='{self.series_id}' scored={len(self)}>"


def split_stream(samples: Sequence[Sample], init_size: int):
    """
    Drop invalid rows, then split into the initial block and the scored rest.
    """
    valid = []
    skipped = []
    for s in samples:
        if s.is_valid():
            valid.append(s)
        else:
            skipped.append(s.index)
    if len(valid) <= init_size:
        raise ValueError(f"Stream has {len(valid)} valid samples; need more than the initial block of {init_size}")
    return valid[:init_size], valid[init_size:], skipped


def prequential_run(
        alg: AlgorithmSpec,
        samples: Sequence[Sample],
        init_size: Optional[int] = None,
        series_id: str = '',
) -> EvalReport:
    """
    Train on the initial block, then predict every later sample before the
    model learns from it.
    """
    if init_size is None:
        init_size = default_init_size(alg.config)
    init, scored, skipped = split_stream(samples, init_size)
    if skipped:
        logger.info("%s: skipped %d zero-target or non-finite rows", series_id or 'stream', len(skipped))

    traces = []
    leaks = 0
    with start_span('prequential_run') as span:
        span.set_attribute('algorithm', alg.name)
        span.set_attribute('series', series_id)
        model = alg.build(init)
        for sample in scored:
            trace = model.process(sample)
            if trace.trained_through >= sample.index:
                leaks += 1
            traces.append(trace)

    if leaks:
        logger.error("%s on %s: %d predictions made after training on their own target", alg.name, series_id, leaks)

    return EvalReport(
        alg.name,
        series_id,
        traces,
        init_indices=[s.index for s in init],
        skipped=skipped,
        leaks=leaks,
        wall_time=span.duration,
    )
