"""Deterministic neuroevolution harness for developmental compression experiments.

Evolves recurrent sensor-motor controllers for a planar phototaxis task across
multiple light-placement environments under four treatments (developmental
compression, control, random search, reverse developmental compression) and
emits comparative statistics.
"""

from .errors import ContractViolation, InternalConsistencyError
from .controller import SynapseMatrix, MotorState, SensorVector, motor_update, clamp_weight
from .development import (
    GenomeTensor,
    DevelopmentSchedule,
    interpolated_weight,
    matrix_at_time,
    schedule_for,
)
from .environment import (
    EnvironmentSpec,
    WorldState,
    FitnessRecord,
    environment_suite,
    light_intensity,
    read_sensors,
    step_dynamics,
    simulate,
)
from .evolution import (
    Individual,
    TreatmentConfig,
    RunLog,
    GenerationRecord,
    random_genome,
    mutate,
    evaluate,
    run_treatment,
)
from .analysis import (
    ChampionSummary,
    ComparisonResult,
    overall_run_champion,
    compression_distance,
    median_with_ci,
    mann_whitney_u,
    bonferroni,
    summarize_treatments,
)

__version__ = "0.1.0"
