"""
Analytic gas turbine surrogate and plant input signals.

Inputs are in normalised units on [0, 1], centred at 0.5. With u = x - 0.5:

    g_P(x) = 150 * (1 + sum_k a_k u_k + 0.10 u6 u8 - 0.05 u1 u9 + 0.08 tanh(3 u9))
    g_H(x) = 9500 * (1 + sum_k b_k u_k + 0.04 u1 u8 - 0.05 tanh(3 u9))

    power     = eff * g_P(x) + noise
    heat_rate = g_H(x) / eff + noise

with a = POWER_LINEAR and b = HEAT_RATE_LINEAR below. Both bases stay positive
on the unit cube, so power rises and heat rate falls with efficiency.
"""
from typing import Optional, Sequence, Tuple
import logging

import numpy
import scipy.signal

from drift_ensemble.ingest.profiles import MAX_EFFICIENCY, MIN_EFFICIENCY

logger = logging.getLogger(__name__)

N_INPUTS = 9

POWER_LINEAR = (-0.12, -0.03, 0.05, -0.04, -0.03, 0.06, 0.02, 0.15, 0.20)
HEAT_RATE_LINEAR = (0.08, 0.02, -0.03, 0.03, 0.04, -0.02, -0.01, -0.05, -0.10)

# input signal shape
AR_COEFFICIENT = 0.95
AR_SCALE = 0.05
SINE_AMPLITUDE = 0.25
SINE_PERIODS = (200, 1000)
MIXING = 0.3


class SurrogateParams(object):
    nominal_power: float
    nominal_heat_rate: float
    power_linear: numpy.ndarray
    heat_rate_linear: numpy.ndarray
    noise: float
    outlier_prob: float

    def __init__(
            self,
            nominal_power: float = 150.0,
            nominal_heat_rate: float = 9500.0,
            power_linear: Sequence[float] = POWER_LINEAR,
            heat_rate_linear: Sequence[float] = HEAT_RATE_LINEAR,
            noise: float = 0.005,
            outlier_prob: float = 0.002,
    ):
        if noise < 0:
            raise ValueError("Noise level must be >= 0")
        if not 0 <= outlier_prob < 1:
            raise ValueError("Outlier probability must be in [0, 1)")
        self.nominal_power = nominal_power
        self.nominal_heat_rate = nominal_heat_rate
        self.power_linear = numpy.asarray(power_linear, dtype=float)
        self.heat_rate_linear = numpy.asarray(heat_rate_linear, dtype=float)
        # noise std as a fraction of the nominal outputs
        self.noise = noise
        self.outlier_prob = outlier_prob

    @property
    def noise_std(self) -> numpy.ndarray:
        return self.noise * numpy.array([self.nominal_power, self.nominal_heat_rate])

    def __repr__(self):
        return f"<SurrogateParams noise={self.noise} outlier_prob={self.outlier_prob}>"


def _centred(x) -> numpy.ndarray:
    x = numpy.asarray(x, dtype=float)
    if x.shape[-1] != N_INPUTS:
        raise ValueError(f"Expected {N_INPUTS} inputs, got shape {x.shape}")
    return x - 0.5


def power_base(x, params: SurrogateParams) -> numpy.ndarray:
    u = _centred(x)
    u1, u6, u8, u9 = u[..., 0], u[..., 5], u[..., 7], u[..., 8]
    return params.nominal_power * (
        1.0
        + u @ params.power_linear
        + 0.10 * u6 * u8
        - 0.05 * u1 * u9
        + 0.08 * numpy.tanh(3.0 * u9)
    )


def heat_rate_base(x, params: SurrogateParams) -> numpy.ndarray:
    u = _centred(x)
    u1, u8, u9 = u[..., 0], u[..., 7], u[..., 8]
    return params.nominal_heat_rate * (
        1.0
        + u @ params.heat_rate_linear
        + 0.04 * u1 * u8
        - 0.05 * numpy.tanh(3.0 * u9)
    )


def plant_surrogate(
        x,
        eff,
        params: SurrogateParams,
        rng: Optional[numpy.random.Generator] = None,
) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """
    (power, heat_rate) for one input vector or a batch. Noise is only added
    when `rng` is given and the noise level is nonzero.
    """
    eff = numpy.asarray(eff, dtype=float)
    if ((eff < MIN_EFFICIENCY) | (eff > MAX_EFFICIENCY)).any():
        raise ValueError(f"Efficiency must be within [{MIN_EFFICIENCY}, {MAX_EFFICIENCY}]")

    power = eff * power_base(x, params)
    heat_rate = heat_rate_base(x, params) / eff

    if rng is not None and params.noise > 0:
        std_p, std_h = params.noise_std
        power = power + rng.normal(0.0, std_p, size=numpy.shape(power))
        heat_rate = heat_rate + rng.normal(0.0, std_h, size=numpy.shape(heat_rate))
    return power, heat_rate


def gen_inputs(n_steps: int, seed: int) -> numpy.ndarray:
    """
    (n_steps, 9) plant inputs: per channel a slow sinusoid plus AR(1) noise,
    mixed towards the channel mean so channels co-vary, then clipped to [0, 1].
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")

    rng = numpy.random.default_rng(seed)
    periods = rng.uniform(*SINE_PERIODS, size=N_INPUTS)
    phases = rng.uniform(0.0, 2 * numpy.pi, size=N_INPUTS)
    shocks = rng.normal(0.0, AR_SCALE, size=(n_steps, N_INPUTS))

    t = numpy.arange(n_steps)[:, None]
    slow = SINE_AMPLITUDE * numpy.sin(2 * numpy.pi * t / periods + phases)
    ar = scipy.signal.lfilter([1.0], [1.0, -AR_COEFFICIENT], shocks, axis=0)

    raw = 0.5 + slow + ar
    mixed = (1.0 - MIXING) * raw + MIXING * raw.mean(axis=1, keepdims=True)
    return numpy.clip(mixed, 0.0, 1.0)
