"""Neural controller types and the motor-update dynamics.

Five sensor neurons (four binary touch sensors plus one light sensor) are
fully connected to eight motor neurons; there are no hidden neurons.  Motors
carry a momentum term inside a tanh squashing, scaled by a shared time
constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

N_SENSORS = 5
N_MOTORS = 8
DEFAULT_TAU = 0.3


def _frozen_array(values, shape, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.shape != shape:
        raise ContractViolation(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SynapseMatrix:
    """A 5x8 weight matrix; row j indexes sensors, column i indexes motors."""

    weights: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.weights, (N_SENSORS, N_MOTORS))
        if not np.all(np.isfinite(arr)):
            raise ContractViolation("synapse weights must be finite")
        if np.any(arr < -1.0) or np.any(arr > 1.0):
            raise ContractViolation("synapse weights must lie in [-1, 1]")
        object.__setattr__(self, "weights", arr)

    @classmethod
    def zeros(cls) -> "SynapseMatrix":
        return cls(np.zeros((N_SENSORS, N_MOTORS)))


@dataclass(frozen=True)
class MotorState:
    """Values of the eight motor neurons plus the shared time constant."""

    values: np.ndarray
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        arr = _frozen_array(self.values, (N_MOTORS,))
        if not np.all(np.isfinite(arr)):
            raise ContractViolation("motor values must be finite")
        # valid states: the all-zero initial state or post-tanh values in (-1, 1)
        if np.any(np.abs(arr) >= 1.0):
            raise ContractViolation("motor values must lie in (-1, 1)")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ContractViolation("tau must be a positive finite scalar")
        object.__setattr__(self, "values", arr)

    @classmethod
    def initial(cls, tau: float = DEFAULT_TAU) -> "MotorState":
        return cls(np.zeros(N_MOTORS), tau=tau)


@dataclass(frozen=True)
class SensorVector:
    """Four touch readings in {-1, +1} followed by one nonnegative light reading.

    Touch order is fixed project-wide: [FL, FR, BL, BR].
    """

    touch: np.ndarray
    light: float

    def __post_init__(self):
        arr = _frozen_array(self.touch, (4,))
        if not np.all(np.isin(arr, (-1.0, 1.0))):
            raise ContractViolation("touch entries must be -1 or +1")
        if not (math.isfinite(self.light) and self.light >= 0.0):
            raise ContractViolation("light reading must be finite and >= 0")
        object.__setattr__(self, "touch", arr)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.touch, [self.light]])


def clamp_weight(w: float) -> float:
    """Clamp a synaptic weight into [-1, 1]; mutations that overshoot saturate."""
    if not math.isfinite(w):
        raise ContractViolation(f"weight must be finite, got {w!r}")
    return min(1.0, max(-1.0, w))


def motor_update(prev: MotorState, sensors: SensorVector, weights: SynapseMatrix) -> MotorState:
    """One motor-neuron update: m_i = tanh(m_i + tau * sum_j w_ji * s_j).

    Pure; `prev` is not modified.  Accumulation order over sensors (j = 0..4)
    matches the fused simulation kernel so composed and fused paths agree
    bit-for-bit.
    """
    s = sensors.as_array()
    w = weights.weights
    if s.shape[0] != w.shape[0]:
        raise ContractViolation("sensor/weight dimension mismatch")
    total = np.zeros(N_MOTORS)
    for j in range(N_SENSORS):
        total = total + w[j] * s[j]
    new = np.empty(N_MOTORS)
    for i in range(N_MOTORS):
        new[i] = math.tanh(prev.values[i] + prev.tau * total[i])
    return MotorState(new, tau=prev.tau)
