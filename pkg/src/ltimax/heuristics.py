"""Classical seed-selection baselines.

All selectors break ties by the smaller node id so runs are reproducible.
The greedy selector shares one set of threshold realizations across every
candidate evaluation (common random numbers), which makes its lazy
evaluation consistent with exhaustive re-evaluation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .diffusion import settle_active_matrix, threshold_matrix
from .errors import BudgetError, ContractError
from .graphs import Graph


@dataclass(frozen=True)
class SeedSet:
    """Ordered distinct node ids selected under a budget."""

    nodes: tuple
    budget: int

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ContractError("seed set contains duplicates")
        if len(self.nodes) > self.budget:
            raise ContractError("seed set exceeds its budget")

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def _check_budget(graph: Graph, k: int):
    if k < 0:
        raise BudgetError("budget must be non-negative")
    if k > graph.node_count:
        raise BudgetError(
            f"budget {k} exceeds node count {graph.node_count}")


def select_random(graph: Graph, k: int, rng_seed) -> SeedSet:
    """k distinct nodes drawn uniformly; deterministic per seed."""
    _check_budget(graph, k)
    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(graph.node_count, size=k, replace=False)
    return SeedSet(nodes=tuple(int(v) for v in picks), budget=k)


def select_high_degree(graph: Graph, k: int) -> SeedSet:
    """Top-k nodes by outgoing weight sum, ties by smaller id."""
    _check_budget(graph, k)
    strength = graph.out_strength
    order = np.lexsort((np.arange(graph.node_count), -strength))
    return SeedSet(nodes=tuple(int(v) for v in order[:k]), budget=k)


def select_degree_discount(graph: Graph, k: int, propagation=None) -> SeedSet:
    """Degree-discount selection.

    Each pick reduces the discounted degree of the picked node's
    out-neighbors: dd_v = d_v - 2 t_v - (d_v - t_v) t_v p, where d_v is the
    outgoing weight sum, t_v counts already-selected in-neighbors of v, and
    p defaults to the mean incoming arc weight of the graph.
    """
    _check_budget(graph, k)
    if propagation is None:
        propagation = float(graph.in_weights.mean()) if graph.edge_count else 0.0
    strength = graph.out_strength.astype(np.float64)
    discounted = strength.copy()
    times = np.zeros(graph.node_count, dtype=np.int64)
    chosen = []
    available = np.ones(graph.node_count, dtype=bool)
    ids = np.arange(graph.node_count)
    for _ in range(k):
        order = np.lexsort((ids, -discounted))
        v = int(order[available[order]][0])
        chosen.append(v)
        available[v] = False
        targets, _ = graph.out_neighbors(v)
        for t in targets.tolist():
            if not available[t]:
                continue
            times[t] += 1
            discounted[t] = (strength[t] - 2.0 * times[t]
                             - (strength[t] - times[t]) * times[t] * propagation)
    return SeedSet(nodes=tuple(chosen), budget=k)


class SharedRealizationSpread:
    """Spread estimator over one fixed set of threshold realizations.

    Keeps a settled cascade per realization for the committed seed set, so a
    candidate evaluation restarts propagation from those fixed points rather
    than from scratch. Per-realization active counts are integers, which
    makes estimates exact set functions: two evaluations of the same seed
    set always return the same value.
    """

    def __init__(self, graph: Graph, simulations: int, rng_seed):
        if simulations < 1:
            raise ContractError("simulations must be >= 1")
        self.graph = graph
        self.simulations = simulations
        self.theta = threshold_matrix(graph.node_count, simulations, rng_seed)
        self._weight = graph.in_matrix()
        self._active = np.zeros((graph.node_count, simulations), dtype=bool)
        self._base_total = 0

    @property
    def committed_fraction(self) -> float:
        return self._base_total / (self.simulations * self.graph.node_count)

    def gain(self, candidate: int) -> float:
        """Mean marginal active fraction of adding candidate."""
        if self._active[candidate].all():
            return 0.0
        trial = self._active.copy()
        trial[candidate, :] = True
        settle_active_matrix(self._weight, self.theta, trial)
        total = int(trial.sum())
        return (total - self._base_total) / (self.simulations * self.graph.node_count)

    def commit(self, node: int):
        self._active[node, :] = True
        settle_active_matrix(self._weight, self.theta, self._active)
        self._base_total = int(self._active.sum())


def select_greedy_celf(graph: Graph, k: int, simulations: int, rng_seed):
    """Hill-climbing greedy with lazy marginal re-evaluation.

    Returns (SeedSet, trace) where trace[i] is the estimated active
    fraction after the (i+1)-th pick. Under the shared realizations the
    output matches exhaustive greedy with the same rng_seed.
    """
    _check_budget(graph, k)
    if k == 0:
        return SeedSet(nodes=(), budget=0), []
    evaluator = SharedRealizationSpread(graph, simulations, rng_seed)
    heap = []
    for v in range(graph.node_count):
        heapq.heappush(heap, (-evaluator.gain(v), v, 0))
    chosen = []
    trace = []
    for step in range(k):
        while True:
            neg_gain, v, evaluated_at = heapq.heappop(heap)
            if evaluated_at == step:
                break
            heapq.heappush(heap, (-evaluator.gain(v), v, step))
        evaluator.commit(v)
        chosen.append(v)
        trace.append(evaluator.committed_fraction)
    return SeedSet(nodes=tuple(chosen), budget=k), trace
