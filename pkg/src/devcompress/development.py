"""Linear developmental interpolation of controller weights over a lifetime.

A genome is a stack of E+1 synapse matrices: sheet 0 is the base controller,
sheet e (1-based) the target controller for environment e.  During an
evaluation the active weight matrix moves linearly from a base sheet toward a
target sheet; degenerate schedules (base == target) reduce to a constant
controller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import N_MOTORS, N_SENSORS, SynapseMatrix
from .errors import ContractViolation

SCHEDULE_MODES = ("developmental", "non_developmental", "reverse_developmental", "static")


@dataclass(frozen=True)
class GenomeTensor:
    """Ordered sheets [base, target_1, ..., target_E]."""

    sheets: tuple
    env_count: int

    def __post_init__(self):
        if self.env_count < 1:
            raise ContractViolation("env_count must be >= 1")
        if len(self.sheets) != self.env_count + 1:
            raise ContractViolation(
                f"expected {self.env_count + 1} sheets, got {len(self.sheets)}"
            )
        if not all(isinstance(s, SynapseMatrix) for s in self.sheets):
            raise ContractViolation("every sheet must be a SynapseMatrix")
        object.__setattr__(self, "sheets", tuple(self.sheets))

    @classmethod
    def from_array(cls, arr) -> "GenomeTensor":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[1:] != (N_SENSORS, N_MOTORS):
            raise ContractViolation(f"expected shape (E+1, 5, 8), got {arr.shape}")
        return cls(tuple(SynapseMatrix(a) for a in arr), env_count=arr.shape[0] - 1)

    def as_array(self) -> np.ndarray:
        return np.stack([s.weights for s in self.sheets])

    def sheet(self, k: int) -> SynapseMatrix:
        return self.sheets[k]


@dataclass(frozen=True)
class DevelopmentSchedule:
    """Endpoint matrices and horizon for one evaluation's weight trajectory."""

    base: SynapseMatrix
    target: SynapseMatrix
    horizon: int

    def __post_init__(self):
        if self.is_degenerate:
            if self.horizon < 1:
                raise ContractViolation("horizon must be >= 1")
        elif self.horizon < 2:
            raise ContractViolation("horizon must be >= 2 when base != target")

    @property
    def is_degenerate(self) -> bool:
        return np.array_equal(self.base.weights, self.target.weights)


def interpolated_weight(base_w: float, target_w: float, t: int, T: int) -> float:
    """Weight at development step t of T: ((T-1-t)*base + t*target) / (T-1).

    Exact at both endpoints; intermediate values are clamped into the closed
    interval spanned by the endpoints to absorb floating-point overshoot.
    """
    if T < 2:
        raise ContractViolation("T must be >= 2")
    if not 0 <= t <= T - 1:
        raise ContractViolation(f"t={t} outside [0, {T - 1}]")
    if t == 0:
        return float(base_w)
    if t == T - 1:
        return float(target_w)
    w = ((T - 1 - t) * base_w + t * target_w) / (T - 1)
    lo, hi = min(base_w, target_w), max(base_w, target_w)
    return min(hi, max(lo, w))


def matrix_at_time(schedule: DevelopmentSchedule, t: int) -> SynapseMatrix:
    """Elementwise interpolation of the schedule's base toward its target."""
    if not 0 <= t <= schedule.horizon - 1:
        raise ContractViolation(f"t={t} outside [0, {schedule.horizon - 1}]")
    if schedule.is_degenerate or t == 0:
        return schedule.base
    T = schedule.horizon
    if t == T - 1:
        return schedule.target
    b = schedule.base.weights
    g = schedule.target.weights
    w = ((T - 1 - t) * b + t * g) / (T - 1)
    w = np.minimum(np.maximum(w, np.minimum(b, g)), np.maximum(b, g))
    return SynapseMatrix(w)


def schedule_for(genome: GenomeTensor, env_index: int, mode: str, T: int) -> DevelopmentSchedule:
    """Select base/target sheets for one evaluation.

    developmental:          base = sheet 0,        target = sheet env_index
    non_developmental:      base = sheet 0,        target = sheet 0
    reverse_developmental:  base = sheet env_index, target = sheet 0
    static:                 base = sheet 0,        target = sheet 0
    """
    if mode not in SCHEDULE_MODES:
        raise ContractViolation(f"unknown schedule mode {mode!r}")
    if not 1 <= env_index <= genome.env_count:
        raise ContractViolation(
            f"env_index={env_index} outside [1, {genome.env_count}]"
        )
    base0 = genome.sheet(0)
    if mode == "developmental":
        return DevelopmentSchedule(base0, genome.sheet(env_index), T)
    if mode == "reverse_developmental":
        return DevelopmentSchedule(genome.sheet(env_index), base0, T)
    # non_developmental and static both run the base as a constant controller
    return DevelopmentSchedule(base0, base0, T)
