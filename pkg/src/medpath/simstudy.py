"""Replication engine for the type-I-error and power experiments.

A scenario fixes the linear SEM (binary exposure, two standard-normal
confounders, gaussian noise) and the bootstrap configuration. Studies run R
independent replications of both the classical and the adaptive bootstrap
test; every replication derives its seeds from the master seed, the study
label, and its own index, so results are bit-identical however the work
pool schedules them.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .abtest import AbConfig, ab_test, classical_bootstrap_test
from .data import Dataset
from .errors import InputError, MedpathError

__all__ = [
    "Scenario",
    "ReplicationResult",
    "PowerCurve",
    "generate_scenario_data",
    "run_null_study",
    "run_power_study",
    "qq_data",
    "reproduce",
    "write_type1_qq_csv",
    "write_power_csv",
    "resolve_threads",
]

NULL_HYPOTHESES = {"H01": (0.0, 0.5), "H02": (0.5, 0.0), "H03": (0.0, 0.0)}
POWER_SETTINGS = ("equal_signals", "fixed_product")

# Stable study identifiers for seed derivation; never reorder.
_STUDY_IDS = {
    "H01": 1,
    "H02": 2,
    "H03": 3,
    "equal_signals": 4,
    "fixed_product": 5,
}

_EQUAL_SIGNAL_GRID = tuple(np.linspace(0.0, 0.1, 6))
_RATIO_GRID = (0.5, 1.0, 2.0, 2.25, 3.0, 4.0)

METHOD_CLASSICAL = "classical_bootstrap"
METHOD_AB = "adaptive_bootstrap"


@dataclass(frozen=True)
class Scenario:
    """Data-generating configuration of the linear-SEM experiments."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 1.0
    alpha_intercept: float = 1.0
    beta_intercept: float = 1.0
    alpha_x: tuple[float, float] = (1.0, 1.0)
    beta_x: tuple[float, float] = (1.0, 1.0)
    sigma_m: float = 0.5
    sigma_y: float = 0.5
    n: int = 500
    replications: int = 500
    level: float = 0.05
    ab: AbConfig = field(default_factory=AbConfig)

    def __post_init__(self):
        if self.sigma_m <= 0 or self.sigma_y <= 0:
            raise InputError("noise standard deviations must be positive")
        if self.n < 10 or self.replications < 1:
            raise InputError("n and replications must be sensible positives")
        if not 0.0 < self.level < 1.0:
            raise InputError("level must be inside (0, 1)")

    def to_config(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "alpha_intercept": self.alpha_intercept,
            "beta_intercept": self.beta_intercept,
            "alpha_x": list(self.alpha_x),
            "beta_x": list(self.beta_x),
            "sigma_m": self.sigma_m,
            "sigma_y": self.sigma_y,
            "n": self.n,
            "replications": self.replications,
            "level": self.level,
            "B": self.ab.B,
            "lambda": self.ab.lam,
            "master_seed": self.ab.seed,
        }


@dataclass(frozen=True)
class ReplicationResult:
    """Per-replication p-values for one study."""

    study: str
    p_values: dict[str, np.ndarray]
    elapsed_s: float
    replication_elapsed: np.ndarray

    @property
    def replications(self) -> int:
        return len(self.replication_elapsed)

    def rejection_rate(self, method: str, level: float) -> float:
        p = self.p_values[method]
        return float(np.mean(p <= level))


@dataclass(frozen=True)
class PowerCurve:
    """Rejection rates across a signal grid for both bootstrap methods."""

    setting: str
    grid: tuple[float, ...]
    rates: dict[str, tuple[float, ...]]
    mc_se: dict[str, tuple[float, ...]]
    results: tuple[ReplicationResult, ...]


def generate_scenario_data(scenario: Scenario, replicate_seed) -> Dataset:
    """One simulated dataset; draw order is exposure, confounders, noises."""
    rng = np.random.default_rng(replicate_seed)
    n = scenario.n
    s = (rng.random(n) < 0.5).astype(float)
    x = rng.standard_normal((n, 2))
    eps_m = scenario.sigma_m * rng.standard_normal(n)
    eps_y = scenario.sigma_y * rng.standard_normal(n)
    ax = np.asarray(scenario.alpha_x)
    bx = np.asarray(scenario.beta_x)
    m = scenario.alpha * s + scenario.alpha_intercept + x @ ax + eps_m
    y = (
        scenario.beta * m
        + scenario.beta_intercept
        + x @ bx
        + scenario.gamma * s
        + eps_y
    )
    return Dataset(exposure=s, mediator=m, outcome=y, confounders=x)


def _entropy(master: int, study: str, grid_idx: int, rep: int, stream: int):
    return (int(master), _STUDY_IDS[study], int(grid_idx), int(rep), int(stream))


def _seed_int(entropy) -> int:
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _run_replication(args) -> tuple[float, float, float]:
    """Worker: one dataset, both tests; returns (classical p, AB p, elapsed)."""
    scenario, study, grid_idx, rep = args
    start = time.perf_counter()
    master = scenario.ab.seed
    for attempt in (0, 1):  # a failing replication is re-seeded at most once
        offset = 10 * attempt
        try:
            data = generate_scenario_data(
                scenario, np.random.SeedSequence(_entropy(master, study, grid_idx, rep, offset))
            )
            classical = classical_bootstrap_test(
                data,
                "gaussian",
                replace(scenario.ab, seed=_seed_int(_entropy(master, study, grid_idx, rep, offset + 1))),
            )
            adaptive = ab_test(
                data,
                "gaussian",
                replace(scenario.ab, seed=_seed_int(_entropy(master, study, grid_idx, rep, offset + 2))),
            )
            return (
                classical.p_value_NIE,
                adaptive.p_value_NIE,
                time.perf_counter() - start,
            )
        except MedpathError:
            if attempt == 1:
                raise
    raise AssertionError("unreachable")


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, then MEDPATH_THREADS, then CPU count."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("MEDPATH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"MEDPATH_THREADS must be an integer, got {env!r}") from exc
    return max(1, os.cpu_count() or 1)


def _run_study(
    scenario: Scenario, study: str, grid_idx: int, threads: int | None
) -> ReplicationResult:
    workers = resolve_threads(threads)
    reps = scenario.replications
    tasks = [(scenario, study, grid_idx, rep) for rep in range(reps)]
    start = time.perf_counter()
    if workers == 1 or reps < 8:
        rows = [_run_replication(t) for t in tasks]
    else:
        chunk = max(1, reps // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_replication, tasks, chunksize=chunk))
    classical = np.array([r[0] for r in rows])
    adaptive = np.array([r[1] for r in rows])
    elapsed = np.array([r[2] for r in rows])
    return ReplicationResult(
        study=study,
        p_values={METHOD_CLASSICAL: classical, METHOD_AB: adaptive},
        elapsed_s=time.perf_counter() - start,
        replication_elapsed=elapsed,
    )


def run_null_study(
    hypothesis: str, scenario: Scenario, threads: int | None = None
) -> ReplicationResult:
    """R replications under one of the three null settings."""
    if hypothesis not in NULL_HYPOTHESES:
        raise InputError(f"hypothesis must be one of {sorted(NULL_HYPOTHESES)}")
    alpha, beta = NULL_HYPOTHESES[hypothesis]
    return _run_study(
        replace(scenario, alpha=alpha, beta=beta), hypothesis, 0, threads
    )


def power_grid(setting: str) -> tuple[tuple[float, ...], list[tuple[float, float]]]:
    """Grid values and the (alpha, beta) pair at each point."""
    if setting == "equal_signals":
        grid = _EQUAL_SIGNAL_GRID
        pairs = [(g, g) for g in grid]
    elif setting == "fixed_product":
        grid = _RATIO_GRID
        pairs = [
            (math.sqrt(0.01 * r), math.sqrt(0.01 / r)) for r in grid
        ]
    else:
        raise InputError(f"setting must be one of {POWER_SETTINGS}")
    return tuple(grid), pairs


def run_power_study(
    setting: str, scenario: Scenario, threads: int | None = None
) -> PowerCurve:
    """Rejection rates over the signal grid for both bootstrap methods."""
    grid, pairs = power_grid(setting)
    results = []
    for gi, (alpha, beta) in enumerate(pairs):
        res = _run_study(
            replace(scenario, alpha=alpha, beta=beta), setting, gi, threads
        )
        results.append(res)
    rates: dict[str, tuple[float, ...]] = {}
    mc_se: dict[str, tuple[float, ...]] = {}
    for method in (METHOD_CLASSICAL, METHOD_AB):
        r = tuple(res.rejection_rate(method, scenario.level) for res in results)
        rates[method] = r
        mc_se[method] = tuple(
            math.sqrt(max(p * (1 - p), 1e-12) / scenario.replications) for p in r
        )
    return PowerCurve(
        setting=setting, grid=grid, rates=rates, mc_se=mc_se, results=tuple(results)
    )


def qq_data(pvalues) -> list[tuple[float, float]]:
    """Sorted p-values paired with uniform plotting positions (i - 0.5) / R."""
    p = np.sort(np.asarray(pvalues, dtype=float))
    if p.size == 0:
        raise InputError("qq_data needs at least one p-value")
    expected = (np.arange(1, p.size + 1) - 0.5) / p.size
    return list(zip(expected.tolist(), p.tolist()))


# ---------------------------------------------------------------------------
# CSV / manifest emission
# ---------------------------------------------------------------------------

def write_type1_qq_csv(results: dict[str, ReplicationResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hypothesis", "method", "expected", "observed"])
        for hypothesis in sorted(results):
            res = results[hypothesis]
            for method in (METHOD_CLASSICAL, METHOD_AB):
                for expected, observed in qq_data(res.p_values[method]):
                    writer.writerow([hypothesis, method, repr(expected), repr(observed)])


def write_power_csv(curves: list[PowerCurve], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "grid_value", "method", "rejection_rate", "mc_se"])
        for curve in curves:
            for method in (METHOD_CLASSICAL, METHOD_AB):
                for gv, rate, se in zip(
                    curve.grid, curve.rates[method], curve.mc_se[method]
                ):
                    writer.writerow([curve.setting, repr(gv), method, repr(rate), repr(se)])


def reproduce(
    outdir,
    master_seed: int = 202406,
    scale: float = 1.0,
    threads: int | None = None,
    scenario: Scenario | None = None,
) -> dict:
    """Run the three null studies and both power settings; emit CSVs + manifest.

    scale < 1 shrinks replications and bootstrap size proportionally for
    smoke runs (floors keep the tests well defined).
    """
    if scale <= 0:
        raise InputError("scale must be positive")
    os.makedirs(outdir, exist_ok=True)
    base = scenario or Scenario()
    reps = max(20, round(base.replications * scale))
    b_size = max(19, round(base.ab.B * scale))
    run_scenario = replace(
        base,
        replications=reps,
        ab=replace(base.ab, B=b_size, seed=master_seed),
    )

    start = time.perf_counter()
    null_results: dict[str, ReplicationResult] = {}
    for hypothesis in sorted(NULL_HYPOTHESES):
        null_results[hypothesis] = run_null_study(hypothesis, run_scenario, threads)
    curves = [run_power_study(s, run_scenario, threads) for s in POWER_SETTINGS]
    wall = time.perf_counter() - start

    qq_path = os.path.join(outdir, "type1_qq.csv")
    power_path = os.path.join(outdir, "power.csv")
    write_type1_qq_csv(null_results, qq_path)
    write_power_csv(curves, power_path)

    sizes = {
        h: {
            m: null_results[h].rejection_rate(m, run_scenario.level)
            for m in (METHOD_CLASSICAL, METHOD_AB)
        }
        for h in null_results
    }
    manifest = {
        "master_seed": master_seed,
        "scale": scale,
        "threads": resolve_threads(threads),
        "scenario": run_scenario.to_config(),
        "study_seed_scheme": "SeedSequence((master, study_id, grid_index, replication, stream))",
        "study_ids": _STUDY_IDS,
        "empirical_size": sizes,
        "wall_time_s": wall,
        "outputs": {"type1_qq": "type1_qq.csv", "power": "power.csv"},
        "versions": {"numpy": np.__version__},
    }
    manifest_path = os.path.join(outdir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return {
        "type1_qq": qq_path,
        "power": power_path,
        "manifest": manifest_path,
        "sizes": sizes,
        "curves": curves,
        "null_results": null_results,
    }
