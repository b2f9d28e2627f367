"""
Online ensemble of OS-ELM regressors with short and long term memories.

Each incoming sample is handled in a fixed order: weighted-vote prediction,
per-member error and windowed MSE, median-relative weights, sequential
retraining of every member, a percentage-error check that may create a new
member trained on remembered data, pruning down to the size limit, weight
normalisation and finally the memory updates.
"""
from typing import Iterable, List, NamedTuple, Optional, Sequence
import collections
import enum
import logging
import math

import numpy

from drift_ensemble.analysis.elm import (
    DEFAULT_CANDIDATES,
    DEFAULT_FOLDS,
    DEFAULT_RIDGE,
    ElmState,
    Standardizer,
    batch_train,
    init_hidden_layer,
    predict,
    select_hidden_nodes,
    sequential_update,
)
from drift_ensemble.analysis.memory import (
    DistanceWeights,
    Reservoir,
    SlidingWindow,
    select_training_set,
)
from drift_ensemble.common.errors import ConfigError, DataError, TrainingError
from drift_ensemble.common.models import Sample
from drift_ensemble.common.utils import derive_seed
from drift_ensemble.evaluate.metrics import percentage_error

logger = logging.getLogger(__name__)


class MemoryMode(enum.Enum):
    # window-only training data for new members
    STM_ONLY = 'stm'
    # distance-selected training data from the window and the reservoir
    STM_PLUS_LTM = 'stm+ltm'

    @classmethod
    def from_name(cls, name: str) -> 'MemoryMode':
        for mode in cls:
            if mode.value == name or mode.name.lower() == name.lower():
                return mode
        raise ValueError(f"Unknown memory mode '{name}'")


class EnsembleConfig(object):
    ws: int
    delta: tuple
    max_size: int
    memory_mode: MemoryMode
    output_weight: float
    hidden_candidates: tuple
    cv_folds: int
    activation: str
    ridge: float
    n_hidden: Optional[int]
    seed: int

    def __init__(
            self,
            ws: int = 1000,
            delta: Sequence[float] = (0.04,),
            max_size: int = 10,
            memory_mode: MemoryMode = MemoryMode.STM_PLUS_LTM,
            output_weight: float = 5.0,
            hidden_candidates: Sequence[int] = DEFAULT_CANDIDATES,
            cv_folds: int = DEFAULT_FOLDS,
            activation: str = 'sigmoid',
            ridge: float = DEFAULT_RIDGE,
            n_hidden: Optional[int] = None,
            seed: int = 0,
    ):
        self.ws = int(ws)
        self.delta = tuple(float(d) for d in numpy.atleast_1d(delta))
        self.max_size = int(max_size)
        self.memory_mode = memory_mode
        self.output_weight = float(output_weight)
        self.hidden_candidates = tuple(int(c) for c in hidden_candidates)
        self.cv_folds = int(cv_folds)
        self.activation = activation
        self.ridge = float(ridge)
        # fixed hidden layer size; skips cross validation when set
        self.n_hidden = n_hidden
        self.seed = int(seed)
        self.validate()

    def validate(self):
        sizes = [self.n_hidden] if self.n_hidden is not None else list(self.hidden_candidates)
        if not sizes or min(sizes) < 1:
            raise ConfigError("Hidden layer sizes must be >= 1")
        if self.ws < max(sizes):
            raise ConfigError(f"ws ({self.ws}) must be >= the hidden layer size ({max(sizes)})")
        if self.max_size < 1:
            raise ConfigError("The ensemble size limit must be >= 1")
        if not self.delta or any(d <= 0 for d in self.delta):
            raise ConfigError("Spawn thresholds must be > 0")
        if self.cv_folds < 2:
            raise ConfigError("Cross validation needs at least 2 folds")

    def delta_for(self, n_outputs: int) -> numpy.ndarray:
        if len(self.delta) == 1:
            return numpy.full(n_outputs, self.delta[0])
        if len(self.delta) != n_outputs:
            raise ConfigError(f"Got {len(self.delta)} spawn thresholds for {n_outputs} outputs")
        return numpy.array(self.delta)

    @property
    def largest_hidden(self) -> int:
        return self.n_hidden if self.n_hidden is not None else max(self.hidden_candidates)

    def replace(self, **changes) -> 'EnsembleConfig':
        params = dict(
            ws=self.ws,
            delta=self.delta,
            max_size=self.max_size,
            memory_mode=self.memory_mode,
            output_weight=self.output_weight,
            hidden_candidates=self.hidden_candidates,
            cv_folds=self.cv_folds,
            activation=self.activation,
            ridge=self.ridge,
            n_hidden=self.n_hidden,
            seed=self.seed,
        )
        params.update(changes)
        return EnsembleConfig(**params)

    def __repr__(self):
        return (f"<EnsembleConfig ws={self.ws} delta={self.delta} max_size={self.max_size} "
                f"memory_mode={self.memory_mode.value} seed={self.seed}>")


class InitialModel(object):
    """
    Scalers frozen on the initial data, the selected hidden layer size and the
    first batch-trained model.
    """
    x_scaler: Standardizer
    y_scaler: Standardizer
    n_hidden: int
    state: ElmState
    last_index: int

    def __init__(self, x_scaler, y_scaler, n_hidden, state, last_index):
        self.x_scaler = x_scaler
        self.y_scaler = y_scaler
        self.n_hidden = n_hidden
        self.state = state
        self.last_index = last_index


def fit_initial_model(init_data: Sequence[Sample], cfg: EnsembleConfig) -> InitialModel:
    if not init_data:
        raise ConfigError("No initial training data")

    X = numpy.stack([s.x for s in init_data])
    Y = numpy.stack([numpy.atleast_1d(s.y) for s in init_data])
    x_scaler = Standardizer.fit(X)
    y_scaler = Standardizer.fit(Y)
    Xs = x_scaler.transform(X)
    Ys = y_scaler.transform(Y)

    if cfg.n_hidden is not None:
        n_hidden = cfg.n_hidden
    else:
        try:
            n_hidden = select_hidden_nodes(
                Xs, Ys, cfg.hidden_candidates, cfg.cv_folds, cfg.seed, cfg.activation, cfg.ridge)
        except ValueError as e:
            raise ConfigError(f"Insufficient initial data: {e}")

    layer = init_hidden_layer(n_hidden, X.shape[1], cfg.activation, cfg.seed)
    try:
        state = batch_train(layer, Xs, Ys, cfg.ridge)
    except TrainingError as e:
        raise ConfigError(f"Insufficient initial data: {e}")

    return InitialModel(x_scaler, y_scaler, n_hidden, state, max(s.index for s in init_data))


class EnsembleMember(object):
    member_id: int
    model: ElmState
    weight: float
    life: int
    mse: float
    err_window: collections.deque
    training_indices: tuple

    def __init__(self, member_id: int, model: ElmState, ws: int, weight: float = 1.0, training_indices: Iterable[int] = ()):
        self.member_id = member_id
        self.model = model
        self.weight = weight
        self.life = 0
        self.mse = 0.0
        self.err_window = collections.deque(maxlen=ws)
        self.training_indices = tuple(training_indices)

    def __repr__(self):
        return f"<EnsembleMember id={self.member_id} weight={self.weight:.4g} mse={self.mse:.4g} life={self.life}>"


class MemberSnapshot(NamedTuple):
    member_id: int
    weight: float
    mse: float
    life: int


class StepTrace(object):
    index: int
    prediction: numpy.ndarray
    actual: numpy.ndarray
    ape: numpy.ndarray
    spawned: bool
    pruned: Optional[int]
    members: List[MemberSnapshot]
    failed_members: List[int]
    trained_through: int

    def __init__(self, index, prediction, actual, ape, spawned=False, pruned=None, members=(), failed_members=(), trained_through=-1):
        self.index = index
        self.prediction = prediction
        self.actual = actual
        self.ape = ape
        self.spawned = spawned
        self.pruned = pruned
        self.members = list(members)
        self.failed_members = list(failed_members)
        # last stream index any model had learned from when the prediction was made
        self.trained_through = trained_through

    @property
    def size(self) -> int:
        return len(self.members)

    @staticmethod
    def header(output_names: Sequence[str]) -> List[str]:
        return (['step']
                + [f"pred_{n}" for n in output_names]
                + [f"actual_{n}" for n in output_names]
                + [f"ape_{n}" for n in output_names]
                + ['size', 'spawn'])

    def to_row(self, step: int) -> list:
        return ([step]
                + [float(v) for v in self.prediction]
                + [float(v) for v in self.actual]
                + [float(v) for v in self.ape]
                + [self.size, int(self.spawned)])

    def __repr__(self):
        return f"<StepTrace index={self.index} size={self.size} spawned={self.spawned} ape={self.ape.tolist()}>"


def weighted_vote(outputs: numpy.ndarray, weights: numpy.ndarray) -> numpy.ndarray:
    """
    sum_i w_i o_i / sum_i w_i, falling back to the plain mean when the weights
    sum to zero.
    """
    total = weights.sum()
    if not numpy.isfinite(total) or total <= 0:
        logger.warning("Ensemble weights sum to %s; using the unweighted mean", total)
        return outputs.mean(axis=0)
    return (weights @ outputs) / total


def member_error(member: EnsembleMember, x, y) -> float:
    """
    Squared error of one member summed over outputs.
    """
    residual = numpy.asarray(y, dtype=float) - predict(member.model, x)
    return float(residual @ residual)


def update_mse(member: EnsembleMember, error: float) -> EnsembleMember:
    """
    Mean of the last min(life, ws) errors, kept incrementally. The error
    leaving the window is remembered so the sliding branch is exact; the sum
    is recomputed every ws updates to stop rounding drift.
    """
    if error < 0:
        raise ValueError("Squared error must be >= 0")

    window = member.err_window
    ws = window.maxlen
    leaving = window[0] if len(window) == ws else None
    window.append(error)
    member.life += 1

    if member.life == 1:
        member.mse = error
    elif member.life <= ws:
        member.mse = (member.life - 1) / member.life * member.mse + error / member.life
    else:
        member.mse = member.mse + error / ws - leaving / ws

    if member.life % ws == 0:
        member.mse = math.fsum(window) / len(window)
    member.mse = max(member.mse, 0.0)
    return member


def update_weights(members: Sequence[EnsembleMember]):
    """
    w_i = exp(-(mse_i - median) / median). A zero median carries no ranking,
    so every weight becomes 1.
    """
    mses = numpy.array([m.mse for m in members])
    median = float(numpy.median(mses))
    if median <= 0:
        for m in members:
            m.weight = 1.0
        return
    for m, w in zip(members, numpy.exp(-(mses - median) / median)):
        m.weight = float(w)


def normalize_weights(members: Sequence[EnsembleMember]):
    total = math.fsum(m.weight for m in members)
    if not numpy.isfinite(total) or total <= 0:
        logger.warning("Ensemble weights sum to %s; resetting to uniform", total)
        for m in members:
            m.weight = 1.0 / len(members)
        return
    for m in members:
        m.weight = m.weight / total


def check_spawn_trigger(prediction, actual, delta) -> bool:
    """
    True when the fractional error on any output exceeds its threshold.
    """
    ape = percentage_error(prediction, actual)
    return bool((ape / 100.0 > numpy.asarray(delta)).any())


def prune(members: List[EnsembleMember], max_size: int) -> List[EnsembleMember]:
    """
    Drop the highest-mse member until at most `max_size` remain; on equal mse
    the oldest goes first. Returns the removed members.
    """
    removed = []
    while len(members) > max_size:
        victim = max(members, key=lambda m: (m.mse, -m.member_id))
        members.remove(victim)
        removed.append(victim)
    return removed


class Ensemble(object):
    cfg: EnsembleConfig
    x_scaler: Standardizer
    y_scaler: Standardizer
    n_hidden: int
    members: List[EnsembleMember]
    stm: SlidingWindow
    ltm: Reservoir
    weights: DistanceWeights
    delta: numpy.ndarray
    last_trained_index: int
    spawn_count: int

    def __init__(self, cfg: EnsembleConfig, initial: InitialModel, init_std: Sequence[Sample]):
        self.cfg = cfg
        self.x_scaler = initial.x_scaler
        self.y_scaler = initial.y_scaler
        self.n_hidden = initial.n_hidden
        self.last_trained_index = initial.last_index
        self.spawn_count = 0
        self._next_member_id = 0

        n_inputs = init_std[0].x.shape[0]
        n_outputs = init_std[0].y.shape[0]
        self.delta = cfg.delta_for(n_outputs)
        self.weights = DistanceWeights.for_dims(n_inputs, n_outputs, cfg.output_weight)

        self.members = []
        self._add_member(initial.state, (s.index for s in init_std))

        self.stm = SlidingWindow(cfg.ws)
        for s in init_std[-cfg.ws:]:
            self.stm.push(s)
        self.ltm = Reservoir(cfg.ws, seed=derive_seed(cfg.seed, 2))
        for s in init_std[:cfg.ws]:
            self.ltm.offer(s)

    @property
    def size(self) -> int:
        return len(self.members)

    def _add_member(self, state: ElmState, training_indices: Iterable[int]) -> EnsembleMember:
        member = EnsembleMember(self._next_member_id, state, self.cfg.ws, weight=1.0, training_indices=training_indices)
        self._next_member_id += 1
        self.members.append(member)
        return member

    def standardize(self, sample: Sample) -> Sample:
        return Sample(sample.index, self.x_scaler.transform(sample.x), self.y_scaler.transform(sample.y))

    def _member_outputs(self, x_std) -> numpy.ndarray:
        return numpy.stack([predict(m.model, x_std) for m in self.members])

    def ensemble_predict(self, x) -> numpy.ndarray:
        x_std = self.x_scaler.transform(x)
        weights = numpy.array([m.weight for m in self.members])
        return self.y_scaler.inverse_transform(weighted_vote(self._member_outputs(x_std), weights))

    def retrain_all(self, sample_std: Sample) -> List[int]:
        """
        Sequential update of every member. A member whose update is rejected
        keeps its previous state and is reported.
        """
        failed = []
        for m in self.members:
            try:
                sequential_update(m.model, sample_std.x, sample_std.y)
            except DataError:
                logger.exception("Member %d rejected the update at index %d", m.member_id, sample_std.index)
                failed.append(m.member_id)
        self.last_trained_index = max(self.last_trained_index, sample_std.index)
        return failed

    def training_set(self, current_std: Sample) -> List[Sample]:
        if self.cfg.memory_mode == MemoryMode.STM_ONLY:
            return self.stm.entries[-self.cfg.ws:]
        return select_training_set(self.stm, self.ltm, current_std, self.weights, self.cfg.ws)

    def spawn_model(self, current_std: Sample) -> Optional[EnsembleMember]:
        train = self.training_set(current_std)
        if len(train) < self.n_hidden:
            logger.warning("Spawn skipped at index %d: %d training points for L=%d",
                           current_std.index, len(train), self.n_hidden)
            return None

        layer = init_hidden_layer(
            self.n_hidden,
            current_std.x.shape[0],
            self.cfg.activation,
            derive_seed(self.cfg.seed, 1, self._next_member_id),
        )
        X = numpy.stack([s.x for s in train])
        Y = numpy.stack([s.y for s in train])
        try:
            state = batch_train(layer, X, Y, self.cfg.ridge)
        except DataError:
            logger.exception("Spawn skipped at index %d: training failed", current_std.index)
            return None

        self.spawn_count += 1
        member = self._add_member(state, (s.index for s in train))
        self.last_trained_index = max(self.last_trained_index, current_std.index)
        logger.debug("Spawned member %d at index %d from %d points", member.member_id, current_std.index, len(train))
        return member

    def process_sample(self, sample: Sample) -> StepTrace:
        if not sample.is_valid():
            raise DataError(f"Rejected sample at index {sample.index}: non-finite value or zero target")

        trained_through = self.last_trained_index
        current = self.standardize(sample)

        # (1) predict
        outputs = self._member_outputs(current.x)
        weights = numpy.array([m.weight for m in self.members])
        prediction = self.y_scaler.inverse_transform(weighted_vote(outputs, weights))

        # (2) errors and windowed mse
        residual = current.y - outputs
        for m, e in zip(self.members, (residual ** 2).sum(axis=1)):
            update_mse(m, float(e))

        # (3)
        update_weights(self.members)

        # (4)
        failed = self.retrain_all(current)

        # (5), (6) the trigger uses the step (1) prediction
        spawned = False
        if check_spawn_trigger(prediction, sample.y, self.delta):
            spawned = self.spawn_model(current) is not None

        # (7)
        removed = prune(self.members, self.cfg.max_size)
        for victim in removed:
            logger.debug("Pruned member %d (mse=%.4g) at index %d", victim.member_id, victim.mse, sample.index)

        # (8)
        normalize_weights(self.members)

        # (9)
        self.stm.push(current)
        self.ltm.offer(current, pinned=spawned)

        return StepTrace(
            index=sample.index,
            prediction=prediction,
            actual=sample.y,
            ape=percentage_error(prediction, sample.y),
            spawned=spawned,
            pruned=removed[0].member_id if removed else None,
            members=[MemberSnapshot(m.member_id, m.weight, m.mse, m.life) for m in self.members],
            failed_members=failed,
            trained_through=trained_through,
        )

    process = process_sample


def init_ensemble(init_data: Sequence[Sample], cfg: EnsembleConfig) -> Ensemble:
    """
    Phase I: select L, train the first member on all initial data, fill the
    window with the last ws points and the reservoir with the first ws.
    """
    if len(init_data) < cfg.ws:
        raise ConfigError(f"Need at least ws={cfg.ws} initial samples, got {len(init_data)}")
    initial = fit_initial_model(init_data, cfg)
    init_std = [Sample(s.index, initial.x_scaler.transform(s.x), initial.y_scaler.transform(s.y)) for s in init_data]
    ens = Ensemble(cfg, initial, init_std)
    logger.info("Initialised ensemble: L=%d ws=%d from %d samples", initial.n_hidden, cfg.ws, len(init_data))
    return ens
