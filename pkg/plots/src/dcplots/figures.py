"""Figure construction from experiment run CSVs.

Four figure kinds are supported:

- ``max_fitness``: median champion fitness per generation, log-scale y.
- ``min_fitness``: median worst-environment fitness per generation.
- ``compression``: median base-target distance of dc champions, one series
  per environment count found under the input directory.
- ``dc_vs_reverse``: worst-environment fitness of the dc and reverse_dc
  treatments only.

All series are medians across runs with shaded 95% bootstrap confidence
bands, plotted against cumulative simulation count, with a top axis giving
the corresponding dc generation where dc runs are present.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("max_fitness", "min_fitness", "compression", "dc_vs_reverse")

# same bootstrap parameters the experiment summaries use
BOOTSTRAP_RESAMPLES = 10_000
BOOTSTRAP_SEED = 123456789

_RUN_PATTERN = re.compile(r"^run_(\d+)_([a-z_]+)\.csv$")
_ENV_DIR_PATTERN = re.compile(r"^e(\d+)$")

_SERIES_STYLE = {
    "dc": ("tab:green", "developmental compression"),
    "control": ("tab:red", "control"),
    "random_search": ("tab:blue", "random search"),
    "reverse_dc": ("tab:purple", "reverse compression"),
}
_TREATMENT_ORDER = ("dc", "control", "random_search", "reverse_dc")

_VALUE_COLUMN = {
    "max_fitness": "champion_fitness",
    "min_fitness": "min_env",
    "dc_vs_reverse": "min_env",
    "compression": "compression_distance",
}


class SchemaError(ValueError):
    """A run CSV is missing columns the requested figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    env_count: int
    in_dir: str
    out_path: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.env_count < 1:
            raise ValueError("env_count must be >= 1")


def _read_run_csv(path, needed):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        missing = [col for col in needed if col not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {', '.join(missing)}")
        idx = {col: header.index(col) for col in needed}
        columns = {col: [] for col in needed}
        for row in reader:
            for col in needed:
                columns[col].append(float(row[idx[col]]))
    return {col: np.asarray(vals) for col, vals in columns.items()}


def load_runs(env_dir, needed, treatments=None):
    """Per-treatment column arrays for every finished run CSV in a directory.

    Returns {treatment: [run columns...]}; each run's columns include the
    requested names plus generation and sim_calls_cumulative.
    """
    if not os.path.isdir(env_dir):
        raise FileNotFoundError(f"no such directory: {env_dir}")
    needed = tuple(dict.fromkeys(("generation", "sim_calls_cumulative") + tuple(needed)))
    runs = {}
    for name in sorted(os.listdir(env_dir)):
        match = _RUN_PATTERN.match(name)
        if not match:
            continue
        treatment = match.group(2)
        if treatments is not None and treatment not in treatments:
            continue
        runs.setdefault(treatment, []).append(
            _read_run_csv(os.path.join(env_dir, name), needed)
        )
    return runs


def median_band(matrix, resamples=BOOTSTRAP_RESAMPLES, seed=BOOTSTRAP_SEED):
    """Columnwise median and 95% bootstrap CI for an (n_runs, n_points) array."""
    data = np.sort(np.asarray(matrix, dtype=np.float64), axis=0)
    n_runs, n_points = data.shape
    median = np.median(data, axis=0)
    if n_runs == 1:
        return median, median.copy(), median.copy()
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n_runs, size=(resamples, n_runs))
    lo = np.empty(n_points)
    hi = np.empty(n_points)
    for start in range(0, n_points, 32):  # chunked to bound the resample tensor
        block = data[:, start : start + 32]
        meds = np.median(block[idx, :], axis=1)
        lo[start : start + 32], hi[start : start + 32] = np.percentile(
            meds, [2.5, 97.5], axis=0
        )
    return median, lo, hi


def _stack_treatment(run_list, column):
    """(evaluations, values matrix) for one treatment's aligned run logs."""
    evals = run_list[0]["sim_calls_cumulative"]
    for run in run_list[1:]:
        if not np.array_equal(run["sim_calls_cumulative"], evals):
            raise SchemaError("runs of one treatment disagree on evaluation counts")
    return evals, np.stack([run[column] for run in run_list])


def _env_dir(spec):
    candidate = os.path.join(spec.in_dir, f"e{spec.env_count}")
    return candidate if os.path.isdir(candidate) else spec.in_dir


def _env_dirs(in_dir):
    """All e<N> subdirectories, falling back to the directory itself."""
    found = []
    for name in sorted(os.listdir(in_dir)):
        match = _ENV_DIR_PATTERN.match(name)
        if match and os.path.isdir(os.path.join(in_dir, name)):
            found.append((int(match.group(1)), os.path.join(in_dir, name)))
    return found


def _add_dc_generation_axis(ax, dc_runs):
    """Top axis converting cumulative evaluations to dc generations."""
    evals = dc_runs[0]["sim_calls_cumulative"]
    per_generation = evals[0] / dc_runs[0]["generation"][0]
    secax = ax.secondary_xaxis(
        "top", functions=(lambda x: x / per_generation, lambda g: g * per_generation)
    )
    secax.set_xlabel("dc generations")


def _plot_series(ax, x, matrix, color, label):
    median, lo, hi = median_band(matrix)
    ax.plot(x, median, color=color, label=label)
    ax.fill_between(x, lo, hi, color=color, alpha=0.25, linewidth=0)


def build_figure(spec: FigureSpec):
    """Assemble the requested figure and return it (without saving)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    column = _VALUE_COLUMN[spec.kind]

    if spec.kind == "compression":
        palette = ("tab:green", "tab:olive", "tab:cyan")
        env_dirs = _env_dirs(spec.in_dir)
        if not env_dirs:
            raise FileNotFoundError(f"no run data under {spec.in_dir}")
        plotted = 0
        for i, (env_count, env_dir) in enumerate(env_dirs):
            runs = load_runs(env_dir, (column,), treatments=("dc",))
            if "dc" not in runs:
                continue
            evals, matrix = _stack_treatment(runs["dc"], column)
            _plot_series(ax, evals, matrix, palette[i % len(palette)], f"E={env_count}")
            plotted += 1
        if not plotted:
            raise FileNotFoundError(f"no dc runs under {spec.in_dir}")
        ax.set_ylabel("median compression distance")
    else:
        wanted = ("dc", "reverse_dc") if spec.kind == "dc_vs_reverse" else None
        runs = load_runs(_env_dir(spec), (column,), treatments=wanted)
        if not runs:
            raise FileNotFoundError(f"no run data under {spec.in_dir}")
        for treatment in _TREATMENT_ORDER:
            if treatment not in runs:
                continue
            color, label = _SERIES_STYLE[treatment]
            evals, matrix = _stack_treatment(runs[treatment], column)
            _plot_series(ax, evals, matrix, color, label)
        if "dc" in runs:
            _add_dc_generation_axis(ax, runs["dc"])
        if spec.kind == "max_fitness":
            ax.set_yscale("log")
            ax.set_ylabel("median maximum fitness")
        else:
            ax.set_ylabel("median minimum fitness")

    ax.set_xlabel("evaluations")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    return fig


def render_figure(spec: FigureSpec) -> str:
    """Build the figure and save it as a vector image at spec.out_path."""
    # strip timestamps so identical inputs give identical bytes
    if spec.out_path.endswith(".svg"):
        metadata = {"Date": None}
    elif spec.out_path.endswith(".pdf"):
        metadata = {"CreationDate": None}
    else:
        metadata = None
    with plt.rc_context({"svg.hashsalt": "dcplots"}):
        fig = build_figure(spec)
        try:
            out_dir = os.path.dirname(os.path.abspath(spec.out_path))
            os.makedirs(out_dir, exist_ok=True)
            fig.savefig(spec.out_path, metadata=metadata)
        finally:
            plt.close(fig)
    return spec.out_path
