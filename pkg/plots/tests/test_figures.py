import os

import numpy as np
import pytest

from dcplots import FigureSpec, SchemaError, build_figure, load_runs, median_band, render_figure
from dcplots.cli import main

HEADER = (
    "generation,champion_fitness,env1_nondev,env2_nondev,"
    "min_env,max_env,compression_distance,sim_calls_cumulative"
)


def write_run(env_dir, seed, treatment, gens=12, evals_per_gen=40, rng=None):
    """Fabricate a schema-compliant run CSV with a monotone fitness curve."""
    rng = rng or np.random.default_rng(seed)
    os.makedirs(env_dir, exist_ok=True)
    fitness = np.cumsum(rng.uniform(0, 0.01, gens)) + 0.002
    lines = [HEADER]
    for g in range(1, gens + 1):
        f = float(fitness[g - 1])
        e1, e2 = 0.6 * f, 0.4 * f
        lines.append(
            f"{g},{f!r},{e1!r},{e2!r},{min(e1, e2)!r},{max(e1, e2)!r},"
            f"{float(rng.uniform(4, 6))!r},{g * evals_per_gen}"
        )
    path = os.path.join(env_dir, f"run_{seed}_{treatment}.csv")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def make_env_dir(tmp_path, treatments=("dc", "control", "random_search"), runs=5):
    env_dir = tmp_path / "e2"
    for treatment in treatments:
        gens = 6 if treatment in ("dc", "reverse_dc") else 12
        per_gen = 80 if treatment in ("dc", "reverse_dc") else 40
        for seed in range(runs):
            write_run(env_dir, 1000 + seed, treatment, gens=gens, evals_per_gen=per_gen)
    (env_dir / "summary.csv").write_text("treatment,metric\n")
    (env_dir / "run_9_dc.csv.partial").write_text("junk\n")
    return env_dir


class TestLoadRuns:
    def test_groups_by_treatment_and_skips_non_runs(self, tmp_path):
        env_dir = make_env_dir(tmp_path)
        runs = load_runs(env_dir, ("min_env",))
        assert sorted(runs) == ["control", "dc", "random_search"]
        assert len(runs["dc"]) == 5
        assert set(runs["dc"][0]) == {"generation", "sim_calls_cumulative", "min_env"}

    def test_treatment_filter(self, tmp_path):
        env_dir = make_env_dir(tmp_path)
        runs = load_runs(env_dir, ("min_env",), treatments=("dc",))
        assert sorted(runs) == ["dc"]

    def test_missing_column_named_in_error(self, tmp_path):
        env_dir = tmp_path / "e2"
        os.makedirs(env_dir)
        (env_dir / "run_1_dc.csv").write_text("generation,sim_calls_cumulative\n1,40\n")
        with pytest.raises(SchemaError, match="min_env"):
            load_runs(env_dir, ("min_env",))

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_runs(tmp_path / "nope", ("min_env",))


class TestMedianBand:
    def test_constant_matrix_collapses(self):
        m, lo, hi = median_band(np.full((8, 4), 2.5), resamples=1000)
        assert np.all(m == 2.5) and np.all(lo == 2.5) and np.all(hi == 2.5)

    def test_single_run_has_zero_width_band(self):
        m, lo, hi = median_band([[1.0, 2.0, 3.0]], resamples=1000)
        assert np.array_equal(m, [1.0, 2.0, 3.0])
        assert np.array_equal(lo, m) and np.array_equal(hi, m)

    def test_band_brackets_median(self):
        data = np.random.default_rng(0).normal(size=(15, 6))
        m, lo, hi = median_band(data, resamples=2000)
        assert np.all(lo <= m) and np.all(m <= hi)

    def test_row_permutation_invariant(self):
        data = np.random.default_rng(1).normal(size=(9, 5))
        a = median_band(data, resamples=2000)
        b = median_band(data[::-1], resamples=2000)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)


class TestBuildFigure:
    def spec(self, tmp_path, kind, out="fig.svg"):
        return FigureSpec(kind, 2, str(tmp_path), str(tmp_path / out))

    def test_max_fitness_log_scale_one_series_per_treatment(self, tmp_path):
        make_env_dir(tmp_path)
        fig = build_figure(self.spec(tmp_path, "max_fitness"))
        ax = fig.axes[0]
        assert ax.get_yscale() == "log"
        assert len(ax.lines) == 3  # one median line per treatment
        assert len(ax.collections) == 3  # one CI band per treatment
        assert len(ax.child_axes) == 1  # dc generation axis on top

    def test_min_fitness_linear_scale(self, tmp_path):
        make_env_dir(tmp_path)
        ax = build_figure(self.spec(tmp_path, "min_fitness")).axes[0]
        assert ax.get_yscale() == "linear"
        assert len(ax.lines) == 3

    def test_dc_vs_reverse_plots_two_series_only(self, tmp_path):
        make_env_dir(tmp_path, treatments=("dc", "control", "reverse_dc"))
        ax = build_figure(self.spec(tmp_path, "dc_vs_reverse")).axes[0]
        assert len(ax.lines) == 2
        labels = [line.get_label() for line in ax.lines]
        assert "control" not in labels

    def test_compression_one_series_per_env_count(self, tmp_path):
        make_env_dir(tmp_path)
        env3 = tmp_path / "e3"
        for seed in range(4):
            write_run(env3, seed, "dc", gens=6, evals_per_gen=120)
        fig = build_figure(FigureSpec("compression", 2, str(tmp_path), "x.svg"))
        ax = fig.axes[0]
        assert [line.get_label() for line in ax.lines] == ["E=2", "E=3"]
        assert len(ax.collections) == 2

    def test_no_top_axis_without_dc_runs(self, tmp_path):
        make_env_dir(tmp_path, treatments=("control",))
        fig = build_figure(self.spec(tmp_path, "min_fitness"))
        assert len(fig.axes[0].child_axes) == 0

    def test_mismatched_evaluation_grids_rejected(self, tmp_path):
        env_dir = tmp_path / "e2"
        write_run(env_dir, 1, "dc", gens=6, evals_per_gen=80)
        write_run(env_dir, 2, "dc", gens=6, evals_per_gen=90)
        with pytest.raises(SchemaError):
            build_figure(self.spec(tmp_path, "max_fitness"))

    def test_empty_directory_rejected(self, tmp_path):
        os.makedirs(tmp_path / "e2")
        with pytest.raises(FileNotFoundError):
            build_figure(self.spec(tmp_path, "min_fitness"))

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            FigureSpec("pie", 2, str(tmp_path), "x.svg")


class TestRenderFigure:
    def test_repeated_renders_are_byte_identical(self, tmp_path):
        make_env_dir(tmp_path)
        spec_a = FigureSpec("max_fitness", 2, str(tmp_path), str(tmp_path / "a.svg"))
        spec_b = FigureSpec("max_fitness", 2, str(tmp_path), str(tmp_path / "b.svg"))
        render_figure(spec_a)
        render_figure(spec_b)
        a = (tmp_path / "a.svg").read_bytes()
        assert a == (tmp_path / "b.svg").read_bytes()
        assert b"<svg" in a


class TestCli:
    def test_renders_via_flags(self, tmp_path):
        make_env_dir(tmp_path)
        out = tmp_path / "fig.svg"
        rc = main(
            ["--in", str(tmp_path), "--fig", "min_fitness", "--envs", "2", "--out", str(out)]
        )
        assert rc == 0
        assert out.stat().st_size > 0

    def test_missing_input_is_an_error(self, tmp_path, capsys):
        rc = main(
            ["--in", str(tmp_path / "nope"), "--fig", "compression", "--out", str(tmp_path / "f.svg")]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err
