import math

import numpy as np
import pytest

from devcompress.development import GenomeTensor
from devcompress.environment import environment_suite
from devcompress.errors import ContractViolation, InternalConsistencyError
from devcompress.evolution import (
    Individual,
    RunLog,
    TreatmentConfig,
    best_entry,
    champion_filename,
    evaluate,
    load_champion,
    load_run_csv,
    mutate,
    parse_run_filename,
    random_genome,
    run_filename,
    run_treatment,
    save_champion,
    save_run_csv,
)

BASELINE = 1.0 / 900.0


def zero_genome(env_count):
    return GenomeTensor.from_array(np.zeros((env_count + 1, 5, 8)))


def small_config(treatment, **overrides):
    kwargs = dict(
        treatment=treatment,
        env_count=2,
        generations=10,
        population_size=4,
        horizon=50,
        seed=99,
    )
    kwargs.update(overrides)
    return TreatmentConfig(**kwargs)


class TestTreatmentConfig:
    def test_generations_must_be_even(self):
        with pytest.raises(ContractViolation):
            small_config("dc", generations=7)

    def test_effective_generations_halved_for_developmental_treatments(self):
        assert small_config("dc").effective_generations == 5
        assert small_config("reverse_dc").effective_generations == 5
        assert small_config("control").effective_generations == 10
        assert small_config("random_search").effective_generations == 10

    def test_mutable_sheets_by_treatment(self):
        assert small_config("dc").mutable_sheets == frozenset({0, 1, 2})
        assert small_config("control").mutable_sheets == frozenset({0})
        assert small_config("random_search").mutable_sheets == frozenset({0})


class TestRandomGenome:
    def test_shapes(self):
        rng = np.random.default_rng(0)
        assert len(random_genome(2, rng).sheets) == 3
        assert len(random_genome(4, rng).sheets) == 5

    def test_weights_in_range(self):
        arr = random_genome(3, np.random.default_rng(1)).as_array()
        assert np.all(arr >= -1.0) and np.all(arr <= 1.0)

    def test_deterministic_under_fixed_seed(self):
        a = random_genome(2, np.random.default_rng(7)).as_array()
        b = random_genome(2, np.random.default_rng(7)).as_array()
        assert np.array_equal(a, b)

    def test_env_count_validated(self):
        with pytest.raises(ContractViolation):
            random_genome(0, np.random.default_rng(0))


class TestMutate:
    def test_exactly_one_entry_differs(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            parent = random_genome(2, rng)
            child = mutate(parent, {0, 1, 2}, rng)
            diff = parent.as_array() != child.as_array()
            assert diff.sum() == 1

    def test_restricted_sheets_untouched(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            parent = random_genome(3, rng)
            child = mutate(parent, {0}, rng)
            assert np.array_equal(parent.as_array()[1:], child.as_array()[1:])

    def test_zero_weight_stays_zero(self):
        rng = np.random.default_rng(4)
        parent = zero_genome(1)
        child = mutate(parent, {0, 1}, rng)
        assert np.array_equal(parent.as_array(), child.as_array())

    def test_result_clamped(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            parent = random_genome(1, rng)
            child = mutate(parent, {0, 1}, rng)
            arr = child.as_array()
            assert np.all(arr >= -1.0) and np.all(arr <= 1.0)

    def test_empty_sheets_rejected(self):
        with pytest.raises(ContractViolation):
            mutate(random_genome(1, np.random.default_rng(0)), set(), np.random.default_rng(0))


class TestEvaluate:
    def test_zero_genome_control_baseline(self):
        envs = environment_suite(2, 50)
        ind = evaluate(Individual(zero_genome(2)), envs, "control")
        assert ind.fitness == 2 * BASELINE
        assert set(ind.per_env_records) == {(1, "static"), (2, "static")}

    def test_zero_genome_dc_counts_double(self):
        envs = environment_suite(2, 50)
        ind = evaluate(Individual(zero_genome(2)), envs, "dc")
        assert ind.fitness == 4 * BASELINE
        assert set(ind.per_env_records) == {
            (1, "developmental"),
            (1, "non_developmental"),
            (2, "developmental"),
            (2, "non_developmental"),
        }

    def test_base_equal_targets_makes_dev_equal_nondev(self):
        rng = np.random.default_rng(6)
        sheet = rng.uniform(-1, 1, (5, 8))
        genome = GenomeTensor.from_array(np.stack([sheet, sheet, sheet]))
        envs = environment_suite(2, 50)
        ind = evaluate(Individual(genome), envs, "dc")
        for e in (1, 2):
            dev = ind.per_env_records[(e, "developmental")]
            nondev = ind.per_env_records[(e, "non_developmental")]
            assert np.array_equal(dev.per_step_light, nondev.per_step_light)

    def test_counter_tracks_simulations(self):
        envs = environment_suite(3, 50)
        counter = [0]
        evaluate(Individual(zero_genome(3)), envs, "reverse_dc", counter)
        assert counter[0] == 6
        evaluate(Individual(zero_genome(3)), envs, "random_search", counter)
        assert counter[0] == 9

    def test_env_count_mismatch_rejected(self):
        with pytest.raises(ContractViolation):
            evaluate(Individual(zero_genome(2)), environment_suite(3, 50), "dc")


class TestRunTreatment:
    @pytest.mark.parametrize("treatment", ["dc", "control", "random_search", "reverse_dc"])
    def test_budget_exact(self, treatment):
        cfg = small_config(treatment)
        log = run_treatment(cfg)
        assert log.total_sim_calls == cfg.budget == 10 * 4 * 2
        assert log.entries[-1].sim_calls_cumulative == cfg.budget

    def test_generation_counts(self):
        assert len(run_treatment(small_config("control")).entries) == 10
        assert len(run_treatment(small_config("dc")).entries) == 5

    def test_deterministic_runs(self):
        for treatment in ("dc", "random_search"):
            a = run_treatment(small_config(treatment))
            b = run_treatment(small_config(treatment))
            for ra, rb in zip(a.entries, b.entries):
                assert ra.champion_fitness == rb.champion_fitness
                assert np.array_equal(
                    ra.champion_genome.as_array(), rb.champion_genome.as_array()
                )

    def test_different_seeds_differ(self):
        a = run_treatment(small_config("control", seed=1))
        b = run_treatment(small_config("control", seed=2))
        assert not np.array_equal(
            a.entries[0].champion_genome.as_array(), b.entries[0].champion_genome.as_array()
        )

    @pytest.mark.parametrize("treatment", ["dc", "control", "reverse_dc"])
    def test_hill_climber_champion_monotone(self, treatment):
        log = run_treatment(small_config(treatment, generations=20))
        fits = [r.champion_fitness for r in log.entries]
        assert all(b >= a for a, b in zip(fits, fits[1:]))

    def test_champion_stats_consistent(self):
        log = run_treatment(small_config("dc"))
        for rec in log.entries:
            assert rec.min_env == min(rec.nondev_fitness)
            assert rec.max_env == max(rec.nondev_fitness)
            assert len(rec.nondev_fitness) == 2


class TestSerialization:
    def test_run_filename_roundtrip(self):
        name = run_filename(123, "random_search")
        assert parse_run_filename(name) == (123, "random_search")
        assert parse_run_filename("run_1_dc.csv.partial") is None
        assert parse_run_filename("summary.csv") is None

    def test_csv_roundtrip_preserves_doubles(self, tmp_path):
        log = run_treatment(small_config("dc"))
        path = tmp_path / run_filename(log.config.seed, "dc")
        save_run_csv(log, path)
        header, rows = load_run_csv(path)
        assert header[:2] == ["generation", "champion_fitness"]
        assert len(rows) == len(log.entries)
        for rec, row in zip(log.entries, rows):
            assert row["champion_fitness"] == rec.champion_fitness
            assert row["env1_nondev"] == rec.nondev_fitness[0]
            assert row["compression_distance"] == rec.compression_distance

    def test_champion_document_roundtrip(self, tmp_path):
        log = run_treatment(small_config("control"))
        path = tmp_path / champion_filename(log.config.seed, "control")
        save_champion(log, path)
        genome, doc = load_champion(path)
        rec = best_entry(log)
        assert np.array_equal(genome.as_array(), rec.champion_genome.as_array())
        assert doc["fitness"] == rec.champion_fitness
        assert doc["treatment"] == "control"

    def test_best_entry_prefers_earliest_tie(self):
        log = run_treatment(small_config("control"))
        rec = best_entry(log)
        fits = [r.champion_fitness for r in log.entries]
        assert rec.generation == fits.index(max(fits)) + 1
