"""Mutation, per-treatment evaluation, and the evolutionary loop.

Selection is a parallel hill climber: P independent lineages, one child per
parent per generation, child replaces parent iff child fitness >= parent
fitness.  Random search discards heredity but keeps mutation and evaluation
identical.  Every treatment issues exactly G*P*E simulations per run, with
dc/reverse_dc running G/2 generations of 2E evaluations each.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import compression_distance
from .controller import N_MOTORS, N_SENSORS
from .development import GenomeTensor, schedule_for
from .environment import environment_suite, simulate
from .errors import ContractViolation, InternalConsistencyError

TREATMENTS = ("dc", "control", "random_search", "reverse_dc")

# schedule modes used per evaluation, by treatment
_TREATMENT_MODES = {
    "control": ("static",),
    "random_search": ("static",),
    "dc": ("developmental", "non_developmental"),
    "reverse_dc": ("reverse_developmental", "non_developmental"),
}


@dataclass(frozen=True)
class Individual:
    """A genome with its evaluated fitness and per-evaluation records."""

    genome: GenomeTensor
    fitness: float = math.nan
    per_env_records: dict = field(default_factory=dict)
    id: int = 0
    parent_id: int = -1

    def nondev_fitnesses(self) -> list:
        """Per-environment mean light of the constant-base evaluations."""
        out = []
        for e in range(1, self.genome.env_count + 1):
            rec = self.per_env_records.get((e, "non_developmental"))
            if rec is None:
                rec = self.per_env_records[(e, "static")]
            out.append(rec.mean_light)
        return out


@dataclass(frozen=True)
class TreatmentConfig:
    """One run's treatment, sizes, horizon, and seed.

    `generations` is the shared evaluation budget G: control and random search
    run G generations, dc and reverse_dc run G/2 (each of their individuals
    costs 2E simulations instead of E).
    """

    treatment: str
    env_count: int
    generations: int
    population_size: int
    horizon: int
    seed: int

    def __post_init__(self):
        if self.treatment not in TREATMENTS:
            raise ContractViolation(f"unknown treatment {self.treatment!r}")
        if self.env_count < 1:
            raise ContractViolation("env_count must be >= 1")
        if self.generations < 2 or self.generations % 2 != 0:
            raise ContractViolation("generations must be even and >= 2")
        if self.population_size < 1:
            raise ContractViolation("population_size must be >= 1")
        if self.horizon < 2:
            raise ContractViolation("horizon must be >= 2")

    @property
    def effective_generations(self) -> int:
        if self.treatment in ("dc", "reverse_dc"):
            return self.generations // 2
        return self.generations

    @property
    def mutable_sheets(self) -> frozenset:
        if self.treatment in ("dc", "reverse_dc"):
            return frozenset(range(self.env_count + 1))
        return frozenset({0})

    @property
    def budget(self) -> int:
        return self.generations * self.population_size * self.env_count


@dataclass(frozen=True)
class GenerationRecord:
    """Champion statistics for one generation."""

    generation: int
    champion_genome: GenomeTensor
    champion_fitness: float
    nondev_fitness: tuple
    min_env: float
    max_env: float
    compression_distance: float
    sim_calls_cumulative: int


@dataclass(frozen=True)
class RunLog:
    """Per-generation champion records plus run metadata."""

    config: TreatmentConfig
    entries: tuple
    total_sim_calls: int


def random_genome(env_count: int, rng: np.random.Generator) -> GenomeTensor:
    """E+1 sheets of weights drawn independently and uniformly from [-1, 1]."""
    if env_count < 1:
        raise ContractViolation("env_count must be >= 1")
    arr = rng.uniform(-1.0, 1.0, size=(env_count + 1, N_SENSORS, N_MOTORS))
    return GenomeTensor.from_array(arr)


def mutate(genome: GenomeTensor, mutable_sheets, rng: np.random.Generator) -> GenomeTensor:
    """Resample exactly one weight from Normal(mean=old, stddev=|old|), clamped.

    The position is uniform over the mutable sheets' 5x8 entries.  A weight
    that is exactly zero has stddev zero and therefore stays zero.
    """
    sheets = sorted(mutable_sheets)
    if not sheets:
        raise ContractViolation("mutable_sheets must be nonempty")
    if sheets[0] < 0 or sheets[-1] > genome.env_count:
        raise ContractViolation("mutable sheet index out of range")
    cells = N_SENSORS * N_MOTORS
    idx = int(rng.integers(len(sheets) * cells))
    k = sheets[idx // cells]
    j, i = divmod(idx % cells, N_MOTORS)
    arr = genome.as_array()
    old = arr[k, j, i]
    new = float(rng.normal(old, abs(old)))
    arr[k, j, i] = min(1.0, max(-1.0, new))
    return GenomeTensor.from_array(arr)


def evaluate(individual: Individual, envs, treatment: str, counter=None) -> Individual:
    """Run the treatment's mandated simulations and total their mean light.

    control/random_search: E static evaluations; dc/reverse_dc: per
    environment one developmental (or reversed) plus one non-developmental
    evaluation, 2E total.
    """
    if treatment not in TREATMENTS:
        raise ContractViolation(f"unknown treatment {treatment!r}")
    genome = individual.genome
    if len(envs) != genome.env_count:
        raise ContractViolation("environment list does not match genome env_count")
    records = {}
    for spec in envs:
        for mode in _TREATMENT_MODES[treatment]:
            schedule = schedule_for(genome, spec.index, mode, spec.horizon)
            records[(spec.index, mode)] = simulate(schedule, spec)
            if counter is not None:
                counter[0] += 1
    fitness = math.fsum(rec.mean_light for rec in records.values())
    return replace(individual, fitness=fitness, per_env_records=records)


def _champion_record(ind: Individual, generation: int, sim_calls: int) -> GenerationRecord:
    nondev = tuple(ind.nondev_fitnesses())
    return GenerationRecord(
        generation=generation,
        champion_genome=ind.genome,
        champion_fitness=ind.fitness,
        nondev_fitness=nondev,
        min_env=min(nondev),
        max_env=max(nondev),
        compression_distance=compression_distance(ind.genome),
        sim_calls_cumulative=sim_calls,
    )


def _best(population) -> Individual:
    best = population[0]
    for ind in population[1:]:
        if ind.fitness > best.fitness:
            best = ind
    return best


def run_treatment(config: TreatmentConfig) -> RunLog:
    """Execute one full evolutionary run; deterministic in config.seed."""
    envs = environment_suite(config.env_count, config.horizon)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    counter = [0]
    entries = []
    next_id = 0
    treatment = config.treatment

    if treatment == "random_search":
        for g in range(1, config.effective_generations + 1):
            generation = []
            for _ in range(config.population_size):
                genome = mutate(random_genome(config.env_count, rng), config.mutable_sheets, rng)
                ind = evaluate(Individual(genome, id=next_id), envs, treatment, counter)
                next_id += 1
                generation.append(ind)
            entries.append(_champion_record(_best(generation), g, counter[0]))
    else:
        # parallel hill climber; generation 1 evaluates the initial lineages
        parents = []
        for _ in range(config.population_size):
            ind = evaluate(
                Individual(random_genome(config.env_count, rng), id=next_id),
                envs,
                treatment,
                counter,
            )
            next_id += 1
            parents.append(ind)
        entries.append(_champion_record(_best(parents), 1, counter[0]))
        for g in range(2, config.effective_generations + 1):
            # draw all child genomes first so evaluation order cannot affect
            # the random stream
            child_genomes = [
                mutate(p.genome, config.mutable_sheets, rng) for p in parents
            ]
            for slot, genome in enumerate(child_genomes):
                child = evaluate(
                    Individual(genome, id=next_id, parent_id=parents[slot].id),
                    envs,
                    treatment,
                    counter,
                )
                next_id += 1
                if child.fitness >= parents[slot].fitness:
                    parents[slot] = child
            entries.append(_champion_record(_best(parents), g, counter[0]))

    if counter[0] != config.budget:
        raise InternalConsistencyError(
            f"simulation budget mismatch: {counter[0]} != {config.budget}"
        )
    return RunLog(config=config, entries=tuple(entries), total_sim_calls=counter[0])


# ---------------------------------------------------------------------------
# serialization

_RUN_FILE_RE = re.compile(r"^run_(\d+)_([a-z_]+)\.csv$")


def run_filename(seed: int, treatment: str) -> str:
    return f"run_{seed}_{treatment}.csv"


def champion_filename(seed: int, treatment: str) -> str:
    return f"run_{seed}_{treatment}_champion.json"


def run_csv_header(env_count: int) -> str:
    env_cols = ",".join(f"env{e}_nondev" for e in range(1, env_count + 1))
    return (
        f"generation,champion_fitness,{env_cols},min_env,max_env,"
        "compression_distance,sim_calls_cumulative"
    )


def save_run_csv(log: RunLog, path) -> None:
    """Per-generation champion CSV, full double precision."""
    with open(path, "w") as fh:
        fh.write(run_csv_header(log.config.env_count) + "\n")
        for rec in log.entries:
            fields = [str(rec.generation), repr(rec.champion_fitness)]
            fields += [repr(v) for v in rec.nondev_fitness]
            fields += [
                repr(rec.min_env),
                repr(rec.max_env),
                repr(rec.compression_distance),
                str(rec.sim_calls_cumulative),
            ]
            fh.write(",".join(fields) + "\n")


def best_entry(log: RunLog) -> GenerationRecord:
    """The overall run champion's record; earliest generation wins ties."""
    if not log.entries:
        raise ContractViolation("run log is empty")
    best = log.entries[0]
    for rec in log.entries[1:]:
        if rec.champion_fitness > best.champion_fitness:
            best = rec
    return best


def save_champion(log: RunLog, path) -> None:
    """Overall run champion genome: one row-major array per sheet, plus metadata."""
    rec = best_entry(log)
    doc = {
        "seed": log.config.seed,
        "treatment": log.config.treatment,
        "env_count": log.config.env_count,
        "generation": rec.generation,
        "fitness": rec.champion_fitness,
        "min_env": rec.min_env,
        "max_env": rec.max_env,
        "compression_distance": rec.compression_distance,
        "sheets": [s.weights.flatten().tolist() for s in rec.champion_genome.sheets],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_champion(path):
    """Returns (GenomeTensor, metadata dict) from a champion document."""
    with open(path) as fh:
        doc = json.load(fh)
    arr = np.array(doc["sheets"], dtype=np.float64).reshape(-1, N_SENSORS, N_MOTORS)
    return GenomeTensor.from_array(arr), doc


def parse_run_filename(name: str):
    """Returns (seed, treatment) or None if not a complete run CSV."""
    m = _RUN_FILE_RE.match(name)
    if not m:
        return None
    return int(m.group(1)), m.group(2)


def load_run_csv(path):
    """Parse a run CSV into (header list, list of row dicts)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            parts = line.strip().split(",")
            row = {}
            for key, val in zip(header, parts):
                if key in ("generation", "sim_calls_cumulative"):
                    row[key] = int(val)
                else:
                    row[key] = float(val)
            rows.append(row)
    return header, rows
