"""Batch experiment runner and result summarizer.

Subcommands:
  run        execute a seeded matrix of (treatment, env-count, run) cells
  summarize  regenerate summary.csv / comparisons.csv from run CSVs
  inspect    print a champion genome's sheets and compression distance

Run CSVs for environment count E land in <out>/e<E>/ so each summary file
keeps the fixed schema.  Output bytes are fully determined by the plan and
master seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from . import analysis, evolution
from .errors import ContractViolation

DEFAULTS = {
    "treatments": "dc,control,random_search",
    "envs": "2",
    "runs": 5,
    "generations": 100,
    "pop_size": 20,
    "timesteps": 400,
    "seed": 1,
    "out": "results",
    "workers": 1,
}

PROFILES = {
    "desk": {"runs": 20, "generations": 200, "pop_size": 20, "timesteps": 400},
}


@dataclass(frozen=True)
class ExperimentPlan:
    treatments: tuple
    env_counts: tuple
    runs_per_cell: int
    generations: int
    population_size: int
    horizon: int
    master_seed: int
    out_dir: str
    workers: int = 1

    def __post_init__(self):
        for t in self.treatments:
            if t not in evolution.TREATMENTS:
                raise ContractViolation(f"unknown treatment {t!r}")
        if not self.treatments:
            raise ContractViolation("at least one treatment required")
        for e in self.env_counts:
            if not 1 <= e <= 4:
                raise ContractViolation("environment counts must be in [1, 4]")
        if self.runs_per_cell < 1:
            raise ContractViolation("runs_per_cell must be >= 1")
        if self.generations % 2 != 0:
            raise ContractViolation("generations must be even")
        if self.workers < 1:
            raise ContractViolation("workers must be >= 1")

    def cells(self):
        for treatment in self.treatments:
            for env_count in self.env_counts:
                for run_index in range(self.runs_per_cell):
                    yield treatment, env_count, run_index


def derive_seed(master_seed: int, treatment: str, env_count: int, run_index: int) -> int:
    """Stable 64-bit seed per run cell; adding treatments never shifts others."""
    key = f"{master_seed}:{treatment}:{env_count}:{run_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _cell_config(plan: ExperimentPlan, treatment: str, env_count: int, run_index: int):
    return evolution.TreatmentConfig(
        treatment=treatment,
        env_count=env_count,
        generations=plan.generations,
        population_size=plan.population_size,
        horizon=plan.horizon,
        seed=derive_seed(plan.master_seed, treatment, env_count, run_index),
    )


def _run_cell(args):
    """Execute one run cell and persist its CSV + champion document."""
    plan, treatment, env_count, run_index = args
    config = _cell_config(plan, treatment, env_count, run_index)
    env_dir = os.path.join(plan.out_dir, f"e{env_count}")
    os.makedirs(env_dir, exist_ok=True)
    log = evolution.run_treatment(config)
    csv_path = os.path.join(env_dir, evolution.run_filename(config.seed, treatment))
    champ_path = os.path.join(env_dir, evolution.champion_filename(config.seed, treatment))
    # write under .partial then rename so interrupted cells are never mistaken
    # for complete ones
    evolution.save_run_csv(log, csv_path + ".partial")
    evolution.save_champion(log, champ_path + ".partial")
    os.replace(csv_path + ".partial", csv_path)
    os.replace(champ_path + ".partial", champ_path)
    return csv_path


def run_experiment(plan: ExperimentPlan) -> int:
    """Execute every cell of the plan, then summarize each e<E> directory."""
    try:
        os.makedirs(plan.out_dir, exist_ok=True)
        probe = os.path.join(plan.out_dir, ".write_probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        return 1

    manifest = asdict(plan)
    with open(os.path.join(plan.out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")

    cells = [(plan, t, e, r) for t, e, r in plan.cells()]
    failures = []
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            futures = {pool.submit(_run_cell, cell): cell for cell in cells}
            for future, cell in futures.items():
                try:
                    future.result()
                except Exception as exc:  # crash isolation per cell
                    failures.append((cell[1:], exc))
    else:
        for cell in cells:
            try:
                _run_cell(cell)
            except Exception as exc:
                failures.append((cell[1:], exc))

    status = 0
    for env_count in plan.env_counts:
        env_dir = os.path.join(plan.out_dir, f"e{env_count}")
        try:
            summarize_directory(env_dir)
        except ContractViolation as exc:
            print(f"error: {env_dir}: {exc}", file=sys.stderr)
            status = 1
    for cell, exc in failures:
        print(f"error: run cell {cell} failed: {exc}", file=sys.stderr)
        status = 1
    return status


def load_champion_summaries(directory: str):
    """Champion summaries for every complete run CSV in one directory."""
    summaries = []
    for name in sorted(os.listdir(directory)):
        parsed = evolution.parse_run_filename(name)
        if parsed is None:
            continue
        seed, treatment = parsed
        _, rows = evolution.load_run_csv(os.path.join(directory, name))
        if not rows:
            continue
        best = rows[0]
        for row in rows[1:]:
            if row["champion_fitness"] > best["champion_fitness"]:
                best = row
        summaries.append(analysis.champion_from_row(seed, treatment, best))
    return summaries


def summarize_directory(directory: str) -> None:
    """Write summary.csv and comparisons.csv next to the run CSVs."""
    if not os.path.isdir(directory):
        raise ContractViolation(f"no such directory: {directory}")
    summaries = load_champion_summaries(directory)
    if not summaries:
        raise ContractViolation(f"no complete run CSVs in {directory}")
    rows, comparisons = analysis.summarize_treatments(summaries)
    with open(os.path.join(directory, "summary.csv"), "w") as fh:
        fh.write("treatment,metric,median,ci_lo,ci_hi,stddev,n_runs\n")
        for r in rows:
            fh.write(
                f"{r.treatment},{r.metric},{r.median!r},{r.ci_lo!r},"
                f"{r.ci_hi!r},{r.stddev!r},{r.n_runs}\n"
            )
    with open(os.path.join(directory, "comparisons.csv"), "w") as fh:
        fh.write("pair,U,p_raw,p_bonferroni\n")
        for c in comparisons:
            fh.write(f"{c.pair},{c.u_statistic!r},{c.p_raw!r},{c.p_bonferroni!r}\n")


def summarize(out_dir: str) -> int:
    """Regenerate summaries for out_dir itself or its e<E> subdirectories."""
    if not os.path.isdir(out_dir):
        print(f"error: no such directory: {out_dir}", file=sys.stderr)
        return 1
    env_dirs = sorted(
        os.path.join(out_dir, d)
        for d in os.listdir(out_dir)
        if d.startswith("e") and d[1:].isdigit() and os.path.isdir(os.path.join(out_dir, d))
    )
    targets = env_dirs or [out_dir]
    status = 0
    summarized = 0
    for directory in targets:
        try:
            summarize_directory(directory)
            summarized += 1
        except ContractViolation as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
    if summarized == 0:
        return 1
    return status


def inspect(champion_path: str) -> int:
    """Print a champion genome's sheets and its compression distance."""
    if not os.path.isfile(champion_path):
        print(f"error: no such file: {champion_path}", file=sys.stderr)
        return 1
    genome, doc = evolution.load_champion(champion_path)
    print(f"treatment: {doc['treatment']}  seed: {doc['seed']}")
    print(f"fitness: {doc['fitness']}  generation: {doc['generation']}")
    print(f"min_env: {doc['min_env']}  max_env: {doc['max_env']}")
    with np.printoptions(precision=4, suppress=True):
        for k, sheet in enumerate(genome.sheets):
            label = "base" if k == 0 else f"target {k}"
            print(f"sheet {k} ({label}):")
            print(sheet.weights)
    print(f"compression_distance: {analysis.compression_distance(genome)}")
    return 0


# ---------------------------------------------------------------------------
# argument handling


def _read_config_file(path: str) -> dict:
    """Plain key=value lines; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractViolation(f"{path}:{lineno}: expected key=value")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in DEFAULTS:
                raise ContractViolation(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val
    return values


def _parse_int_list(text: str):
    return tuple(int(part) for part in str(text).split(",") if part)


def build_plan(args: argparse.Namespace) -> ExperimentPlan:
    values = dict(DEFAULTS)
    if args.config:
        values.update(_read_config_file(args.config))
    if args.profile:
        values.update(PROFILES[args.profile])
    flag_map = {
        "treatments": args.treatment,
        "envs": args.envs,
        "runs": args.runs,
        "generations": args.generations,
        "pop_size": args.pop_size,
        "timesteps": args.timesteps,
        "seed": args.seed,
        "out": args.out,
        "workers": args.workers,
    }
    for key, val in flag_map.items():
        if val is not None:
            values[key] = val
    return ExperimentPlan(
        treatments=tuple(str(values["treatments"]).split(",")),
        env_counts=_parse_int_list(values["envs"]),
        runs_per_cell=int(values["runs"]),
        generations=int(values["generations"]),
        population_size=int(values["pop_size"]),
        horizon=int(values["timesteps"]),
        master_seed=int(values["seed"]),
        out_dir=str(values["out"]),
        workers=int(values["workers"]),
    )


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="devcompress",
        description="Developmental-compression neuroevolution experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment plan")
    run_p.add_argument("--config", help="key=value configuration file")
    run_p.add_argument("--profile", choices=sorted(PROFILES), help="named size preset")
    run_p.add_argument("--treatment", help="comma-separated treatments")
    run_p.add_argument("--envs", help="comma-separated environment counts")
    run_p.add_argument("--runs", type=int, help="runs per (treatment, E) cell")
    run_p.add_argument("--generations", type=int, help="evaluation-budget generations G")
    run_p.add_argument("--pop-size", dest="pop_size", type=int, help="population size P")
    run_p.add_argument("--timesteps", type=int, help="simulation horizon T")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--workers", type=int, help="parallel worker processes")

    sum_p = sub.add_parser("summarize", help="rebuild summary/comparison CSVs")
    sum_p.add_argument("out_dir")

    ins_p = sub.add_parser("inspect", help="print a champion genome")
    ins_p.add_argument("champion_file")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "run":
            return run_experiment(build_plan(args))
        if args.command == "summarize":
            return summarize(args.out_dir)
        return inspect(args.champion_file)
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
