"""Benchmark harness comparing seed-selection methods across graph scales.

All methods at a given (scale, repetition) cell share the same generated
graph and the same evaluation threshold stream, so per-cell comparisons are
paired. Wall-clock columns time seed selection only.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .graphs import GeneratorConfig, generate
from .heuristics import (select_degree_discount, select_greedy_celf,
                         select_high_degree, select_random)
from .inference import InferenceConfig, evaluate_solution, select_seeds
from .errors import ConfigError

BENCH_SCHEMA = "ltimax-bench-v1"
BENCH_COLUMNS = ("scale", "repetition", "graph_seed", "method", "budget",
                 "seed_count", "active_rate_mean", "active_rate_std_error",
                 "wall_clock_ms")

METHODS = ("random", "degree", "degree-discount", "greedy", "dreim")


@dataclass
class BenchRow:
    scale: int
    repetition: int
    graph_seed: int
    method: str
    budget: int
    seed_count: int
    active_rate_mean: float
    active_rate_std_error: float
    wall_clock_ms: float
    arcs: int

    def as_record(self):
        return {
            "scale": self.scale,
            "repetition": self.repetition,
            "graph_seed": self.graph_seed,
            "method": self.method,
            "budget": self.budget,
            "seed_count": self.seed_count,
            "active_rate_mean": f"{self.active_rate_mean:.6f}",
            "active_rate_std_error": f"{self.active_rate_std_error:.6f}",
            "wall_clock_ms": f"{self.wall_clock_ms:.3f}",
        }


@dataclass
class TimingFit:
    method: str
    budget: int
    slope_ms_per_arc: float
    intercept_ms: float
    r_squared: float


def _select(method, graph, budget, *, method_seed, selection_simulations,
            params, batch, layers):
    if method == "random":
        return select_random(graph, budget, method_seed).nodes
    if method == "degree":
        return select_high_degree(graph, budget).nodes
    if method == "degree-discount":
        return select_degree_discount(graph, budget).nodes
    if method == "greedy":
        seeds, _ = select_greedy_celf(graph, budget, selection_simulations,
                                      method_seed)
        return seeds.nodes
    if method == "dreim":
        if params is None:
            raise ConfigError("method dreim needs a checkpoint")
        config = InferenceConfig(budget=budget, batch=min(batch, max(budget, 1)),
                                 layers=layers)
        seeds, _ = select_seeds(graph, params, config)
        return seeds.nodes
    raise ConfigError(f"unknown method {method!r}")


def run_bench(methods, scales, budgets, repetitions, *, gen_m=4, gen_p=0.05,
              simulations=10_000, selection_simulations=1000, rng_seed=0,
              params=None, layers=3, batch=1, workers=None):
    """Full cross-product of (scale, repetition, method, budget) cells.

    Returns (rows, fits): one BenchRow per cell, plus a linear wall-clock
    versus arc-count fit per (method, budget) whenever at least three
    scales were measured.
    """
    for method in methods:
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}")
    root = np.random.SeedSequence(rng_seed)
    pair_seeds = {}
    streams = root.spawn(len(scales) * repetitions)
    for i, scale in enumerate(scales):
        for rep in range(repetitions):
            stream = streams[i * repetitions + rep]
            vals = stream.generate_state(3, dtype=np.uint64)
            pair_seeds[(scale, rep)] = tuple(int(v) % (2 ** 62) for v in vals)

    rows = []
    for scale in scales:
        for rep in range(repetitions):
            graph_seed, eval_seed, method_seed = pair_seeds[(scale, rep)]
            graph = generate(GeneratorConfig(model="powerlaw-cluster",
                                             n=scale, m=gen_m, p=gen_p,
                                             rng_seed=graph_seed))
            for method in methods:
                for budget in budgets:
                    start = time.perf_counter()
                    nodes = _select(
                        method, graph, budget, method_seed=method_seed,
                        selection_simulations=selection_simulations,
                        params=params, batch=batch, layers=layers)
                    elapsed_ms = (time.perf_counter() - start) * 1000.0
                    report = evaluate_solution(graph, nodes, simulations,
                                               eval_seed, workers=workers)
                    rows.append(BenchRow(
                        scale=scale, repetition=rep, graph_seed=graph_seed,
                        method=method, budget=budget, seed_count=len(nodes),
                        active_rate_mean=report.active_rate,
                        active_rate_std_error=report.std_error,
                        wall_clock_ms=elapsed_ms, arcs=graph.edge_count))
    return rows, timing_fits(rows)


def timing_fits(rows):
    """Least-squares wall-clock vs arc-count fit per (method, budget)."""
    grouped = {}
    for row in rows:
        grouped.setdefault((row.method, row.budget), []).append(row)
    fits = []
    for (method, budget), cell_rows in sorted(grouped.items()):
        by_scale = {}
        for row in cell_rows:
            by_scale.setdefault(row.arcs, []).append(row.wall_clock_ms)
        if len(by_scale) < 3:
            continue
        arcs = np.array(sorted(by_scale))
        times = np.array([np.mean(by_scale[a]) for a in arcs])
        slope, intercept = np.polyfit(arcs, times, 1)
        predicted = slope * arcs + intercept
        ss_res = float(((times - predicted) ** 2).sum())
        ss_tot = float(((times - times.mean()) ** 2).sum())
        r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        fits.append(TimingFit(method=method, budget=budget,
                              slope_ms_per_arc=float(slope),
                              intercept_ms=float(intercept),
                              r_squared=r_squared))
    return fits


def write_bench_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(BENCH_COLUMNS))
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())
