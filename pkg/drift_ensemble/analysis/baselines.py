"""
Single-model reference regressors: an ELM frozen after its initial training,
and an OS-ELM updated on every sample. Both start from the same initial model
as the ensemble.
"""
from typing import Sequence
import logging

from drift_ensemble.analysis.elm import predict, sequential_update
from drift_ensemble.analysis.ensemble import (
    EnsembleConfig,
    InitialModel,
    MemberSnapshot,
    StepTrace,
    fit_initial_model,
)
from drift_ensemble.common.errors import DataError
from drift_ensemble.common.models import Sample
from drift_ensemble.evaluate.metrics import percentage_error

logger = logging.getLogger(__name__)


class StaticElm(object):
    initial: InitialModel
    last_trained_index: int
    spawn_count: int = 0

    def __init__(self, initial: InitialModel):
        self.initial = initial
        self.state = initial.state
        self.last_trained_index = initial.last_index

    @property
    def size(self) -> int:
        return 1

    def _predict(self, sample: Sample):
        x_std = self.initial.x_scaler.transform(sample.x)
        return self.initial.y_scaler.inverse_transform(predict(self.state, x_std))

    def _learn(self, sample: Sample):
        pass

    def process(self, sample: Sample) -> StepTrace:
        if not sample.is_valid():
            raise DataError(f"Rejected sample at index {sample.index}: non-finite value or zero target")

        trained_through = self.last_trained_index
        prediction = self._predict(sample)
        self._learn(sample)
        return StepTrace(
            index=sample.index,
            prediction=prediction,
            actual=sample.y,
            ape=percentage_error(prediction, sample.y),
            members=[MemberSnapshot(0, 1.0, 0.0, self.state.samples_seen)],
            trained_through=trained_through,
        )


class SequentialElm(StaticElm):
    """
    OS-ELM: the initial model followed by one recursive least squares step per
    sample.
    """

    def _learn(self, sample: Sample):
        sequential_update(
            self.state,
            self.initial.x_scaler.transform(sample.x),
            self.initial.y_scaler.transform(sample.y),
        )
        self.last_trained_index = max(self.last_trained_index, sample.index)


def build_static_elm(init_data: Sequence[Sample], cfg: EnsembleConfig) -> StaticElm:
    return StaticElm(fit_initial_model(init_data, cfg))


def build_sequential_elm(init_data: Sequence[Sample], cfg: EnsembleConfig) -> SequentialElm:
    return SequentialElm(fit_initial_model(init_data, cfg))
