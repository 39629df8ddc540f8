"""Phototaxis task environments and the deterministic locomotion surrogate.

A point robot with four legs lives on an unbounded plane.  Its eight motors
are interpreted as [hip_FL, knee_FL, hip_FR, knee_FR, hip_BL, knee_BL,
hip_BR, knee_BR].  A leg is in stance when its knee motor is <= 0; stance
legs convert hip-motor changes into propulsion, left/right asymmetry into
turning.  Fitness is the time-averaged inverse-square light intensity at the
robot's position.

The hot simulation loop is compiled with numba; a composed pure-Python path
through the public per-step operations produces bit-identical results (see
tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .controller import DEFAULT_TAU, MotorState, N_MOTORS, SensorVector, motor_update
from .development import DevelopmentSchedule
from .errors import ContractViolation

LIGHT_DISTANCE = 30.0  # body lengths from origin to each light source
MIN_LIGHT_DISTANCE = 0.5  # floor on the inverse-square law singularity
SPEED_GAIN = 0.05  # body lengths per unit summed hip change
TURN_GAIN = 0.25  # radians per unit left-right hip-change asymmetry
DEFAULT_HORIZON = 1000

_HIP_IDX = (0, 2, 4, 6)
_KNEE_IDX = (1, 3, 5, 7)

# placements for E = 1..4: +y, -y, +x, -x, all at LIGHT_DISTANCE
_PLACEMENTS = ((0.0, 30.0), (0.0, -30.0), (30.0, 0.0), (-30.0, 0.0))

TRAJECTORY_COLUMNS = (
    "t,x,y,theta,light,touch_FL,touch_FR,touch_BL,touch_BR,"
    "m1,m2,m3,m4,m5,m6,m7,m8"
)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Light placement and evaluation horizon for one task environment."""

    light_position: tuple
    horizon: int = DEFAULT_HORIZON
    index: int = 1

    def __post_init__(self):
        if self.horizon < 2:
            raise ContractViolation("horizon must be >= 2")
        if self.index < 1:
            raise ContractViolation("environment index is 1-based")
        object.__setattr__(
            self, "light_position", (float(self.light_position[0]), float(self.light_position[1]))
        )


def environment_suite(env_count: int, horizon: int = DEFAULT_HORIZON) -> list:
    """The E task environments: lights at +y, -y, +x, -x, 30 body lengths out."""
    if not 1 <= env_count <= len(_PLACEMENTS):
        raise ContractViolation(f"env_count must be in [1, {len(_PLACEMENTS)}]")
    return [
        EnvironmentSpec(_PLACEMENTS[e], horizon=horizon, index=e + 1)
        for e in range(env_count)
    ]


@dataclass(frozen=True)
class WorldState:
    """Robot pose and per-leg state within one environment."""

    position: tuple
    heading: float
    motors: MotorState
    prev_hip: np.ndarray
    stance: np.ndarray
    time: int

    @classmethod
    def initial(cls, tau: float = DEFAULT_TAU) -> "WorldState":
        prev_hip = np.zeros(4)
        prev_hip.flags.writeable = False
        stance = np.ones(4, dtype=bool)
        stance.flags.writeable = False
        return cls(
            position=(0.0, 0.0),
            heading=0.0,
            motors=MotorState.initial(tau),
            prev_hip=prev_hip,
            stance=stance,
            time=0,
        )


@dataclass(frozen=True)
class FitnessRecord:
    """Per-step light readings and their mean over the horizon."""

    per_step_light: np.ndarray
    mean_light: float

    @classmethod
    def from_steps(cls, per_step) -> "FitnessRecord":
        arr = np.asarray(per_step, dtype=np.float64)
        arr.flags.writeable = False
        # fsum keeps the all-equal case exact (e.g. the 1/900 baseline)
        return cls(arr, math.fsum(arr) / arr.shape[0])


def light_intensity(position, spec: EnvironmentSpec) -> float:
    """Inverse-square light reading, floored at MIN_LIGHT_DISTANCE."""
    dx = spec.light_position[0] - position[0]
    dy = spec.light_position[1] - position[1]
    d = math.sqrt(dx * dx + dy * dy)
    if d < MIN_LIGHT_DISTANCE:
        d = MIN_LIGHT_DISTANCE
    return 1.0 / (d * d)


def read_sensors(state: WorldState, spec: EnvironmentSpec) -> SensorVector:
    """Touch = +1 for stance legs, -1 otherwise; light from the current pose."""
    touch = np.where(state.stance, 1.0, -1.0)
    return SensorVector(touch, light_intensity(state.position, spec))


def step_dynamics(state: WorldState, new_motors: MotorState) -> WorldState:
    """Advance pose one step from freshly updated motors.

    Stance legs (knee <= 0) push by their hip-motor change; summed pushes set
    forward speed, left-minus-right pushes set the turn.
    """
    m = new_motors.values
    push = [0.0, 0.0, 0.0, 0.0]
    stance = np.empty(4, dtype=bool)
    for k in range(4):
        stance[k] = m[_KNEE_IDX[k]] <= 0.0
        if stance[k]:
            push[k] = m[_HIP_IDX[k]] - state.prev_hip[k]
    speed = SPEED_GAIN * (push[0] + push[1] + push[2] + push[3])
    turn = TURN_GAIN * (push[0] + push[2] - push[1] - push[3])
    heading = state.heading + turn
    x = state.position[0] + speed * math.sin(heading)
    y = state.position[1] + speed * math.cos(heading)
    prev_hip = np.array([m[i] for i in _HIP_IDX])
    prev_hip.flags.writeable = False
    stance.flags.writeable = False
    return WorldState(
        position=(x, y),
        heading=heading,
        motors=new_motors,
        prev_hip=prev_hip,
        stance=stance,
        time=state.time + 1,
    )


@njit(cache=True)
def _sim_kernel(base, target, degenerate, light_x, light_y, T, tau, traj):  # pragma: no cover
    record = traj.shape[0] == T
    x = 0.0
    y = 0.0
    theta = 0.0
    motors = np.zeros(N_MOTORS)
    prev_hip = np.zeros(4)
    stance = np.ones(4, np.bool_)
    per_step = np.empty(T)
    Tm1 = T - 1
    for t in range(T):
        # sensors at the current pose
        dx = light_x - x
        dy = light_y - y
        d = math.sqrt(dx * dx + dy * dy)
        if d < MIN_LIGHT_DISTANCE:
            d = MIN_LIGHT_DISTANCE
        light = 1.0 / (d * d)
        s = np.empty(5)
        for k in range(4):
            s[k] = 1.0 if stance[k] else -1.0
        s[4] = light
        # motor update with the developed weight matrix for step t
        new_motors = np.empty(N_MOTORS)
        for i in range(N_MOTORS):
            acc = 0.0
            for j in range(5):
                if degenerate or t == 0:
                    w = base[j, i]
                elif t == Tm1:
                    w = target[j, i]
                else:
                    w = ((Tm1 - t) * base[j, i] + t * target[j, i]) / Tm1
                    lo = min(base[j, i], target[j, i])
                    hi = max(base[j, i], target[j, i])
                    if w < lo:
                        w = lo
                    elif w > hi:
                        w = hi
                acc += w * s[j]
            new_motors[i] = math.tanh(motors[i] + tau * acc)
        # surrogate dynamics
        p0 = 0.0
        p1 = 0.0
        p2 = 0.0
        p3 = 0.0
        if new_motors[1] <= 0.0:
            p0 = new_motors[0] - prev_hip[0]
        if new_motors[3] <= 0.0:
            p1 = new_motors[2] - prev_hip[1]
        if new_motors[5] <= 0.0:
            p2 = new_motors[4] - prev_hip[2]
        if new_motors[7] <= 0.0:
            p3 = new_motors[6] - prev_hip[3]
        speed = SPEED_GAIN * (p0 + p1 + p2 + p3)
        turn = TURN_GAIN * (p0 + p2 - p1 - p3)
        theta = theta + turn
        x = x + speed * math.sin(theta)
        y = y + speed * math.cos(theta)
        for k in range(4):
            prev_hip[k] = new_motors[2 * k]
            stance[k] = new_motors[2 * k + 1] <= 0.0
        # light reading after the move is this step's fitness contribution
        dx = light_x - x
        dy = light_y - y
        d = math.sqrt(dx * dx + dy * dy)
        if d < MIN_LIGHT_DISTANCE:
            d = MIN_LIGHT_DISTANCE
        p = 1.0 / (d * d)
        per_step[t] = p
        if record:
            traj[t, 0] = t
            traj[t, 1] = x
            traj[t, 2] = y
            traj[t, 3] = theta
            traj[t, 4] = p
            for k in range(4):
                traj[t, 5 + k] = s[k]
            for i in range(N_MOTORS):
                traj[t, 9 + i] = new_motors[i]
        motors = new_motors
    return per_step


def simulate(
    schedule: DevelopmentSchedule,
    spec: EnvironmentSpec,
    tau: float = DEFAULT_TAU,
    record_trajectory: bool = False,
):
    """Run one full evaluation; returns a FitnessRecord.

    With record_trajectory=True returns (FitnessRecord, trajectory) where
    trajectory is a (T, 17) array with columns TRAJECTORY_COLUMNS.
    """
    if schedule.horizon != spec.horizon:
        raise ContractViolation(
            f"schedule horizon {schedule.horizon} != environment horizon {spec.horizon}"
        )
    T = spec.horizon
    traj = np.empty((T, 17)) if record_trajectory else np.empty((0, 17))
    per_step = _sim_kernel(
        schedule.base.weights,
        schedule.target.weights,
        schedule.is_degenerate,
        spec.light_position[0],
        spec.light_position[1],
        T,
        tau,
        traj,
    )
    record = FitnessRecord.from_steps(per_step)
    if record_trajectory:
        return record, traj
    return record


def write_trajectory(path, trajectory) -> None:
    """Dump one evaluation's trajectory as plain CSV for debugging/plotting."""
    with open(path, "w") as fh:
        fh.write(TRAJECTORY_COLUMNS + "\n")
        for row in trajectory:
            fields = [str(int(row[0]))] + [repr(float(v)) for v in row[1:]]
            fh.write(",".join(fields) + "\n")
