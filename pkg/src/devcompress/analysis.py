"""Measurement pipeline: run champions, bootstrap medians, rank statistics.

Operates on run logs and champion summaries only; it never imports the
evolutionary machinery, so it can also be fed rows parsed back from CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ContractViolation

BOOTSTRAP_RESAMPLES = 10_000
BOOTSTRAP_SEED = 123456789
# the paper-style family of three comparisons fixes the Bonferroni factor
BONFERRONI_COMPARISONS = 3
# exact Mann-Whitney enumeration below this smaller-sample size, ties permitting
EXACT_MWU_MAX_N = 8

_TREATMENT_ORDER = ("dc", "control", "random_search", "reverse_dc")


@dataclass(frozen=True)
class ChampionSummary:
    """Non-developmental performance of one run's overall champion."""

    seed: int
    treatment: str
    fitness: float
    per_env: tuple
    min_env: float
    max_env: float
    compression_distance: float
    genome: object = None

    def __post_init__(self):
        if self.min_env > self.max_env:
            raise ContractViolation("min_env must not exceed max_env")


@dataclass(frozen=True)
class ComparisonResult:
    """Mann-Whitney comparison of min-environment fitness for two treatments."""

    pair: str
    u_statistic: float
    p_raw: float
    p_bonferroni: float


@dataclass(frozen=True)
class SummaryRow:
    treatment: str
    metric: str
    median: float
    ci_lo: float
    ci_hi: float
    stddev: float
    n_runs: int


def overall_run_champion(log) -> ChampionSummary:
    """The generation champion with maximal total fitness; earliest tie wins."""
    if not log.entries:
        raise ContractViolation("run log is empty")
    best = log.entries[0]
    for rec in log.entries[1:]:
        if rec.champion_fitness > best.champion_fitness:
            best = rec
    return ChampionSummary(
        seed=log.config.seed,
        treatment=log.config.treatment,
        fitness=best.champion_fitness,
        per_env=tuple(best.nondev_fitness),
        min_env=best.min_env,
        max_env=best.max_env,
        compression_distance=best.compression_distance,
        genome=best.champion_genome,
    )


def compression_distance(genome) -> float:
    """Mean Euclidean distance from the base sheet to each target sheet."""
    base = genome.sheet(0).weights
    dists = []
    for e in range(1, genome.env_count + 1):
        diff = genome.sheet(e).weights - base
        dists.append(math.sqrt(float(np.sum(diff * diff))))
    return math.fsum(dists) / genome.env_count


def median_with_ci(values, resamples: int = BOOTSTRAP_RESAMPLES, rng=None):
    """Sample median with a seeded percentile-bootstrap 95% CI.

    Inputs are sorted before resampling so the result is invariant to input
    permutation.
    """
    data = np.sort(np.asarray(values, dtype=np.float64))
    if data.size == 0:
        raise ContractViolation("values must be nonempty")
    if resamples < 1000:
        raise ContractViolation("resamples must be >= 1000")
    if rng is None:
        rng = np.random.default_rng(BOOTSTRAP_SEED)
    median = float(np.median(data))
    idx = rng.integers(0, data.size, size=(resamples, data.size))
    meds = np.median(data[idx], axis=1)
    lo, hi = np.percentile(meds, [2.5, 97.5])
    return median, float(lo), float(hi)


def _rank_with_ties(values):
    """Fractional ranks (ties get the mean rank) and the tie-size list."""
    n = len(values)
    order = sorted(range(n), key=values.__getitem__)
    ranks = [0.0] * n
    ties = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        ties.append(j - i + 1)
        i = j + 1
    return ranks, ties


def _exact_u_cdf(n1: int, n2: int, u_max: int) -> float:
    """P(U <= u_max) under the null, by exact counting over rank subsets."""
    n = n1 + n2
    max_sum = sum(range(n - n1 + 1, n + 1))
    # ways[k][s]: subsets of size k of the ranks seen so far with rank sum s
    ways = [[0] * (max_sum + 1) for _ in range(n1 + 1)]
    ways[0][0] = 1
    for r in range(1, n + 1):
        for k in range(min(r, n1), 0, -1):
            row, prev = ways[k], ways[k - 1]
            for s in range(max_sum, r - 1, -1):
                if prev[s - r]:
                    row[s] += prev[s - r]
    offset = n1 * (n1 + 1) // 2  # U = rank_sum - offset
    total = math.comb(n, n1)
    favorable = sum(ways[n1][offset + u] for u in range(0, u_max + 1))
    return favorable / total


def mann_whitney_u(a, b):
    """Two-sided Mann-Whitney U test; returns (U of the first sample, p).

    Exact enumeration when the smaller sample has at most EXACT_MWU_MAX_N
    observations and there are no ties; otherwise the normal approximation
    with tie and continuity corrections.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if not a or not b:
        raise ContractViolation("both samples must be nonempty")
    n1, n2 = len(a), len(b)
    ranks, ties = _rank_with_ties(a + b)
    r1 = math.fsum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0  # pairs where the first sample wins
    u2 = n1 * n2 - u1
    u_min = min(u1, u2)

    no_ties = all(t == 1 for t in ties)
    if min(n1, n2) <= EXACT_MWU_MAX_N and no_ties:
        p = 2.0 * _exact_u_cdf(n1, n2, int(round(u_min)))
        return u1, min(1.0, p)

    n = n1 + n2
    tie_term = math.fsum(t ** 3 - t for t in ties)
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return u1, 1.0
    z = max(0.0, abs(u1 - n1 * n2 / 2.0) - 0.5) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return u1, min(1.0, max(0.0, p))


def bonferroni(p: float, m: int) -> float:
    """Family-wise correction: min(1, m * p)."""
    if not 0.0 <= p <= 1.0:
        raise ContractViolation("p must lie in [0, 1]")
    if m < 1:
        raise ContractViolation("m must be >= 1")
    return min(1.0, m * p)


def _stddev(values) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def summarize_treatments(summaries, rng=None, resamples: int = BOOTSTRAP_RESAMPLES):
    """Medians with bootstrap CIs per treatment, plus pairwise comparisons.

    Returns (summary_rows, comparison_rows).  Comparisons are run on min_env
    in a fixed treatment order so output is invariant to input permutation.
    """
    if not summaries:
        raise ContractViolation("no champion summaries given")
    if rng is None:
        rng = np.random.default_rng(BOOTSTRAP_SEED)
    by_treatment = {}
    for s in summaries:
        by_treatment.setdefault(s.treatment, []).append(s)
    unknown = set(by_treatment) - set(_TREATMENT_ORDER)
    if unknown:
        raise ContractViolation(f"unknown treatments {sorted(unknown)}")
    present = [t for t in _TREATMENT_ORDER if t in by_treatment]

    summary_rows = []
    for treatment in present:
        group = by_treatment[treatment]
        for metric in ("min_env", "max_env"):
            values = sorted(getattr(s, metric) for s in group)
            median, lo, hi = median_with_ci(values, resamples=resamples, rng=rng)
            summary_rows.append(
                SummaryRow(treatment, metric, median, lo, hi, _stddev(values), len(group))
            )

    comparison_rows = []
    for t_a, t_b in combinations(present, 2):
        vals_a = sorted(s.min_env for s in by_treatment[t_a])
        vals_b = sorted(s.min_env for s in by_treatment[t_b])
        u, p = mann_whitney_u(vals_a, vals_b)
        comparison_rows.append(
            ComparisonResult(
                pair=f"{t_a}_vs_{t_b}",
                u_statistic=u,
                p_raw=p,
                p_bonferroni=bonferroni(p, BONFERRONI_COMPARISONS),
            )
        )
    return summary_rows, comparison_rows


def champion_from_row(seed: int, treatment: str, row: dict) -> ChampionSummary:
    """Build a ChampionSummary from a parsed run-CSV row."""
    per_env = tuple(
        row[key] for key in sorted(row) if key.startswith("env") and key.endswith("_nondev")
    )
    return ChampionSummary(
        seed=seed,
        treatment=treatment,
        fitness=row["champion_fitness"],
        per_env=per_env,
        min_env=row["min_env"],
        max_env=row["max_env"],
        compression_distance=row["compression_distance"],
    )
