"""
Extreme learning machine primitives.

A hidden layer of L random, fixed neurons maps an input vector to a feature
vector H(x). Only the L x r output weights beta are learned: once in batch by
(ridge regularised) least squares, then one sample at a time by the recursive
least squares update of the online sequential ELM.
"""
from typing import Dict, Callable, Iterable, Sequence
import logging

import numpy
import scipy.linalg
from scipy.special import expit

from drift_ensemble.common.errors import DataError, NumericalError, TrainingError

logger = logging.getLogger(__name__)

ACTIVATIONS: Dict[str, Callable[[numpy.ndarray], numpy.ndarray]] = {
    'sigmoid': expit,
    'tanh': numpy.tanh,
    'sine': numpy.sin,
}

DEFAULT_RIDGE = 1e-6
DEFAULT_CANDIDATES = (10, 20, 40, 80)
DEFAULT_FOLDS = 5


class HiddenLayer(object):
    """
    Random hidden layer: L weight vectors of dimension d, L biases and an
    activation. Arrays are read-only, the layer never changes once built.
    """
    input_weights: numpy.ndarray  # (L, d)
    biases: numpy.ndarray  # (L,)
    activation: str

    def __init__(self, input_weights: numpy.ndarray, biases: numpy.ndarray, activation: str = 'sigmoid'):
        if activation not in ACTIVATIONS:
            raise ValueError(f"Unknown activation '{activation}'")
        input_weights = numpy.array(input_weights, dtype=float, ndmin=2)
        biases = numpy.array(biases, dtype=float, ndmin=1)
        if input_weights.shape[0] != biases.shape[0]:
            raise ValueError("Need exactly one bias per hidden neuron")
        input_weights.setflags(write=False)
        biases.setflags(write=False)

        self.input_weights = input_weights
        self.biases = biases
        self.activation = activation

    @property
    def n_hidden(self) -> int:
        return self.input_weights.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.input_weights.shape[1]

    def __repr__(self):
        return f"<HiddenLayer L={self.n_hidden} d={self.n_inputs} activation='{self.activation}'>"

    def __eq__(self, other):
        if not isinstance(other, HiddenLayer):
            return NotImplemented
        return (self.activation == other.activation
                and numpy.array_equal(self.input_weights, other.input_weights)
                and numpy.array_equal(self.biases, other.biases))


class ElmState(object):
    """
    Trainable part of an OS-ELM: output weights beta (L x r) and the RLS
    inverse correlation matrix R (L x L). Updated in place; one writer at a time.
    """
    hidden: HiddenLayer
    beta: numpy.ndarray
    R: numpy.ndarray
    samples_seen: int

    def __init__(self, hidden: HiddenLayer, beta: numpy.ndarray, R: numpy.ndarray, samples_seen: int = 0):
        self.hidden = hidden
        self.beta = beta
        self.R = R
        self.samples_seen = samples_seen

    @property
    def n_outputs(self) -> int:
        return self.beta.shape[1]

    def copy(self) -> 'ElmState':
        return ElmState(self.hidden, self.beta.copy(), self.R.copy(), self.samples_seen)

    def __repr__(self):
        return f"<ElmState L={self.hidden.n_hidden} r={self.n_outputs} samples_seen={self.samples_seen}>"


def init_hidden_layer(n_hidden: int, n_inputs: int, activation: str = 'sigmoid', seed: int = 0) -> HiddenLayer:
    """
    Draw a hidden layer with weights and biases ~ Uniform(-1, 1).
    Equal arguments always give an identical layer.
    """
    if n_hidden < 1:
        raise ValueError(f"Hidden layer needs at least one neuron (got {n_hidden})")
    if n_inputs < 1:
        raise ValueError(f"Hidden layer needs at least one input (got {n_inputs})")

    rng = numpy.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=(n_hidden, n_inputs))
    biases = rng.uniform(-1.0, 1.0, size=n_hidden)
    return HiddenLayer(weights, biases, activation)


def hidden_map(layer: HiddenLayer, x) -> numpy.ndarray:
    """
    H(x): element i is G(w_i . x + b_i). Accepts one input vector (d,) giving
    (L,), or a batch (n, d) giving (n, L).
    """
    x = numpy.asarray(x, dtype=float)
    if x.shape[-1] != layer.n_inputs or x.ndim > 2:
        raise ValueError(f"Expected input of dimension {layer.n_inputs}, got shape {x.shape}")
    return ACTIVATIONS[layer.activation](x @ layer.input_weights.T + layer.biases)


def batch_train(layer: HiddenLayer, X, Y, ridge: float = DEFAULT_RIDGE) -> ElmState:
    """
    Initial training phase: beta = (H'H + ridge I)^-1 H'Y, keeping the inverse
    as R for later sequential updates. Needs at least L samples.
    """
    X = numpy.atleast_2d(numpy.asarray(X, dtype=float))
    Y = numpy.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"Got {X.shape[0]} inputs but {Y.shape[0]} targets")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")

    n_samples = X.shape[0]
    L = layer.n_hidden
    if n_samples < L:
        raise TrainingError(f"Batch training needs at least L={L} samples, got {n_samples}")
    if not (numpy.isfinite(X).all() and numpy.isfinite(Y).all()):
        raise DataError("Batch training data contains non-finite values")

    H = hidden_map(layer, X)
    A = H.T @ H
    if ridge:
        A[numpy.diag_indices_from(A)] += ridge

    try:
        factor = scipy.linalg.cho_factor(A, lower=False, check_finite=False)
    except numpy.linalg.LinAlgError:
        raise NumericalError(f"H'H is singular (L={L}, ridge={ridge}); use ridge > 0")

    beta = scipy.linalg.cho_solve(factor, H.T @ Y, check_finite=False)
    R = scipy.linalg.cho_solve(factor, numpy.eye(L), check_finite=False)
    R = (R + R.T) / 2
    return ElmState(layer, beta, R, n_samples)


def sequential_update(state: ElmState, x, y) -> ElmState:
    """
    One OS-ELM step with the single row h = H(x):

        R    <- R - R h h' R / (1 + h' R h)
        beta <- beta + R h (y' - h' beta)

    R is symmetrised after the rank-one downdate. Mutates and returns `state`;
    a rejected sample leaves it untouched.
    """
    x = numpy.asarray(x, dtype=float)
    y = numpy.atleast_1d(numpy.asarray(y, dtype=float))
    if not (numpy.isfinite(x).all() and numpy.isfinite(y).all()):
        raise DataError("Sequential update rejected: non-finite sample")
    if y.shape != (state.n_outputs,):
        raise ValueError(f"Expected target of dimension {state.n_outputs}, got shape {y.shape}")

    h = hidden_map(state.hidden, x)
    Rh = state.R @ h
    denom = 1.0 + h @ Rh
    if not numpy.isfinite(denom) or denom <= 0:
        raise NumericalError(f"Sequential update rejected: degenerate gain denominator {denom}")

    R = state.R - numpy.outer(Rh, Rh) / denom
    R = (R + R.T) / 2
    innovation = y - h @ state.beta

    state.R = R
    state.beta = state.beta + numpy.outer(R @ h, innovation)
    state.samples_seen += 1
    return state


def predict(state: ElmState, x) -> numpy.ndarray:
    """
    f(x) = H(x) beta, for one input (d,) or a batch (n, d).
    """
    return hidden_map(state.hidden, x) @ state.beta


class Standardizer(object):
    """
    Per-column mean/std scaling, frozen once fitted. Constant columns keep a
    scale of 1.
    """
    mean: numpy.ndarray
    scale: numpy.ndarray

    def __init__(self, mean, scale):
        self.mean = numpy.asarray(mean, dtype=float)
        self.scale = numpy.asarray(scale, dtype=float)

    @classmethod
    def fit(cls, data) -> 'Standardizer':
        data = numpy.atleast_2d(numpy.asarray(data, dtype=float))
        mean = data.mean(axis=0)
        scale = data.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(mean, scale)

    def transform(self, data) -> numpy.ndarray:
        return (numpy.asarray(data, dtype=float) - self.mean) / self.scale

    def inverse_transform(self, data) -> numpy.ndarray:
        return numpy.asarray(data, dtype=float) * self.scale + self.mean


def _fold_indices(n_samples: int, k: int, seed: int) -> Sequence[numpy.ndarray]:
    order = numpy.random.default_rng(seed).permutation(n_samples)
    return numpy.array_split(order, k)


def cross_validate(
        X,
        Y,
        n_hidden: int,
        k: int = DEFAULT_FOLDS,
        seed: int = 0,
        activation: str = 'sigmoid',
        ridge: float = DEFAULT_RIDGE,
) -> float:
    """
    Mean k-fold validation MSE of an ELM with `n_hidden` neurons. Folds come
    from `seed`; the hidden layer is drawn from the same seed for every fold.
    """
    X = numpy.atleast_2d(numpy.asarray(X, dtype=float))
    Y = numpy.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if k < 2:
        raise ValueError("Cross validation needs k >= 2")

    layer = init_hidden_layer(n_hidden, X.shape[1], activation, seed)
    folds = _fold_indices(X.shape[0], k, seed)
    errors = []
    for i, valid_idx in enumerate(folds):
        train_idx = numpy.concatenate([f for j, f in enumerate(folds) if j != i])
        state = batch_train(layer, X[train_idx], Y[train_idx], ridge)
        residual = Y[valid_idx] - predict(state, X[valid_idx])
        errors.append(float(numpy.mean(residual ** 2)))
    return float(numpy.mean(errors))


def select_hidden_nodes(
        X,
        Y,
        candidates: Iterable[int] = DEFAULT_CANDIDATES,
        k: int = DEFAULT_FOLDS,
        seed: int = 0,
        activation: str = 'sigmoid',
        ridge: float = DEFAULT_RIDGE,
) -> int:
    """
    Pick the hidden layer size with the lowest k-fold validation MSE; ties go
    to the smaller size.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("No hidden layer candidates given")

    n_samples = numpy.atleast_2d(numpy.asarray(X)).shape[0]
    needed = max(candidates) * k / (k - 1)
    if n_samples < needed:
        raise ValueError(
            f"Cross validation over L <= {max(candidates)} with k={k} needs at least "
            f"{int(numpy.ceil(needed))} samples, got {n_samples}")

    scores: Dict[int, float] = {}
    for L in sorted(set(candidates)):
        scores[L] = cross_validate(X, Y, L, k, seed, activation, ridge)
        logger.debug("L=%d cv mse=%.6g", L, scores[L])

    best = min(scores, key=lambda L: (scores[L], L))
    logger.info("Selected L=%d from candidates %s", best, sorted(scores))
    return best
