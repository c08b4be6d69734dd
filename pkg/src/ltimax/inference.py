"""Budget-constrained seed selection with a trained Q-network.

Selection proceeds in adaptive steps: encode the graph with the current
seed set, score all non-seed nodes, take the `batch` highest-Q nodes, and
repeat until the budget is met. batch = 1 re-evaluates after every pick;
batch = budget reduces to the top-k of a single ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import SpreadEstimate, estimate_spread
from .encoder import encode
from .errors import BudgetError, ConfigError
from .graphs import Graph
from .heuristics import SeedSet
from .qnet import QNetParams, q_values


@dataclass(frozen=True)
class InferenceConfig:
    """budget: number of seeds; batch: nodes added per adaptive step."""

    budget: int
    batch: int = 1
    layers: int = 3
    checkpoint: str | None = None

    def validate(self, graph: Graph):
        if self.budget < 0:
            raise BudgetError("budget must be non-negative")
        if self.budget > graph.node_count:
            raise BudgetError(
                f"budget {self.budget} exceeds node count {graph.node_count}")
        if self.budget > 0 and not 1 <= self.batch <= self.budget:
            raise ConfigError("batch must satisfy 1 <= batch <= budget")


@dataclass(frozen=True)
class StepSnapshot:
    """Q-value bookkeeping for one adaptive step."""

    step: int
    chosen: tuple
    chosen_q: tuple
    candidate_count: int
    q_max: float
    q_min: float


def select_seeds(graph: Graph, params: QNetParams, config: InferenceConfig):
    """Greedy Q-driven selection; returns (SeedSet, [StepSnapshot...]).

    Ties are broken by the smaller node id. When the budget is not a
    multiple of the batch size the final step truncates to land exactly on
    the budget.
    """
    config.validate(graph)
    seeds = []
    snapshots = []
    not_seed = np.ones(graph.node_count, dtype=bool)
    step = 0
    while len(seeds) < config.budget:
        take = min(config.batch, config.budget - len(seeds))
        table = encode(graph, seeds, params.encoder, config.layers)
        candidates = np.flatnonzero(not_seed)
        q = q_values(table, params.decoder, candidates)
        order = np.lexsort((candidates, -q))
        picked = candidates[order[:take]]
        snapshots.append(StepSnapshot(
            step=step,
            chosen=tuple(int(v) for v in picked),
            chosen_q=tuple(float(x) for x in q[order[:take]]),
            candidate_count=int(candidates.size),
            q_max=float(q.max()),
            q_min=float(q.min()),
        ))
        for v in picked:
            seeds.append(int(v))
            not_seed[v] = False
        step += 1
    return SeedSet(nodes=tuple(seeds), budget=config.budget), snapshots


@dataclass(frozen=True)
class EvaluationReport:
    """Monte-Carlo quality report for a chosen seed set."""

    estimate: SpreadEstimate
    node_count: int
    seed_count: int

    @property
    def active_rate(self) -> float:
        return self.estimate.mean

    @property
    def std_error(self) -> float:
        return self.estimate.std_error

    @property
    def mean_active_count(self) -> float:
        return self.estimate.mean * self.node_count


def evaluate_solution(graph: Graph, seed_set, simulations: int, rng_seed,
                      workers=None) -> EvaluationReport:
    """Estimate the active rate of a seed set over fresh threshold draws."""
    nodes = tuple(seed_set)
    estimate = estimate_spread(graph, nodes, simulations, rng_seed,
                               workers=workers)
    return EvaluationReport(estimate=estimate, node_count=graph.node_count,
                            seed_count=len(nodes))
