"""Linear threshold cascade simulation.

A cascade is deterministic once every node's activation threshold is fixed:
an inactive node activates as soon as the weights of its active in-neighbors
sum to its threshold. `simulate` runs one realization to its fixed point by
frontier propagation in O(M); `estimate_spread` averages the active fraction
over many independently drawn threshold realizations using a vectorized
engine; `exact_spread` enumerates live-edge configurations on tiny graphs
and serves as the independent oracle for the Monte-Carlo path.
"""

from __future__ import annotations

import itertools
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, EnumerationError
from .graphs import Graph

# Activation compares accumulated weight against theta - TOLERANCE so the
# outcome does not depend on float summation order; a node with zero
# accumulated weight never fires because thresholds are strictly positive.
TOLERANCE = 1e-12

_CHUNK = 1024


@dataclass(frozen=True)
class ThresholdRealization:
    """One sampled threshold vector; values lie strictly inside (0, 1)."""

    theta: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        object.__setattr__(self, "theta", theta)
        if theta.size and (theta.min() <= 0.0 or theta.max() >= 1.0):
            raise ContractError("thresholds must lie strictly in (0, 1)")


@dataclass
class CascadeState:
    """Fixed point of one cascade.

    active: boolean activation vector.
    accumulated: per-node weight received from active in-neighbors.
    seeds: seed set used so far, in insertion order.
    realization: the threshold vector the cascade was run under.
    frontier: nodes whose activation has not been propagated yet; empty
        for every state returned by the public operations.
    """

    active: np.ndarray
    accumulated: np.ndarray
    seeds: tuple
    realization: ThresholdRealization
    frontier: tuple = field(default=())

    @property
    def active_count(self) -> int:
        return int(self.active.sum())

    @property
    def active_fraction(self) -> float:
        n = len(self.active)
        return self.active_count / n if n else 0.0


@dataclass(frozen=True)
class SpreadEstimate:
    """Monte-Carlo estimate of the expected active fraction."""

    mean: float
    std_error: float
    simulations: int


def _open_uniform(rng, shape):
    """Uniform draws in the open interval (0, 1); exact zeros are redrawn."""
    out = rng.random(shape)
    zero = out == 0.0
    while zero.any():
        out[zero] = rng.random(int(zero.sum()))
        zero = out == 0.0
    return out


def sample_realization(graph: Graph, rng_seed) -> ThresholdRealization:
    rng = np.random.default_rng(rng_seed)
    theta = _open_uniform(rng, graph.node_count)
    return ThresholdRealization(theta=theta, rng_seed=rng_seed)


def threshold_matrix(node_count: int, count: int, rng_seed) -> np.ndarray:
    """(node_count, count) matrix of independent threshold vectors."""
    rng = np.random.default_rng(rng_seed)
    return _open_uniform(rng, (node_count, count))


def _propagate(adjacency, theta, active, accumulated, queue):
    """Drain the frontier queue, activating nodes whose accumulated weight
    reaches their threshold. Mutates active/accumulated in place."""
    while queue:
        u = queue.popleft()
        targets, weights = adjacency[u]
        for v, w in zip(targets, weights):
            if active[v]:
                continue
            accumulated[v] += w
            if accumulated[v] > 0.0 and accumulated[v] >= theta[v] - TOLERANCE:
                active[v] = True
                queue.append(v)


def simulate(graph: Graph, seed_set, realization: ThresholdRealization) -> CascadeState:
    """Run one cascade from seed_set to its fixed point."""
    n = graph.node_count
    theta = realization.theta
    if len(theta) != n:
        raise ContractError("realization size does not match graph")
    active = np.zeros(n, dtype=bool)
    accumulated = np.zeros(n, dtype=np.float64)
    seeds = []
    queue = deque()
    for s in seed_set:
        s = int(s)
        if s < 0 or s >= n:
            raise ContractError(f"seed {s} outside graph")
        if not active[s]:
            active[s] = True
            queue.append(s)
        seeds.append(s)
    _propagate(graph.adjacency_lists(), theta, active, accumulated, queue)
    return CascadeState(active=active, accumulated=accumulated,
                        seeds=tuple(seeds), realization=realization)


def simulate_incremental(graph: Graph, state: CascadeState, new_seed: int) -> CascadeState:
    """Extend a settled cascade with one more seed.

    Equivalent to re-running simulate with the enlarged seed set: with fixed
    thresholds the cascade is monotone in the seed set, so propagation can
    resume from the previous fixed point. The input state is not mutated.
    """
    new_seed = int(new_seed)
    if new_seed < 0 or new_seed >= graph.node_count:
        raise ContractError(f"seed {new_seed} outside graph")
    seeds = state.seeds + (new_seed,)
    if state.active[new_seed]:
        return CascadeState(active=state.active.copy(),
                            accumulated=state.accumulated.copy(),
                            seeds=seeds, realization=state.realization)
    active = state.active.copy()
    accumulated = state.accumulated.copy()
    active[new_seed] = True
    queue = deque([new_seed])
    _propagate(graph.adjacency_lists(), state.realization.theta,
               active, accumulated, queue)
    return CascadeState(active=active, accumulated=accumulated,
                        seeds=seeds, realization=state.realization)


# ---------------------------------------------------------------------------
# Vectorized multi-realization engine
# ---------------------------------------------------------------------------


def settle_active_matrix(weight_matrix, theta, active):
    """Drive a batch of cascades to their fixed points.

    active is (N, R) boolean, one column per realization, theta matches.
    Each round recomputes every node's incoming active weight with one
    sparse matmul; rounds repeat until no column changes. Mutates and
    returns active.
    """
    bound = theta - TOLERANCE
    while True:
        incoming = weight_matrix @ active.astype(np.float64)
        newly = (incoming >= bound) & (incoming > 0.0) & ~active
        if not newly.any():
            return active
        active |= newly


def resolve_workers(workers=None) -> int:
    """Worker count: explicit argument, else LTIMAX_THREADS, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("LTIMAX_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def estimate_spread(graph: Graph, seed_set, simulations: int, rng_seed,
                    workers=None) -> SpreadEstimate:
    """Monte-Carlo expected active fraction over fresh threshold draws.

    Realizations are processed in fixed-size chunks whose RNG streams are
    spawned from rng_seed by chunk index, and per-chunk results are exact
    integer sums, so the estimate is reproducible for a given rng_seed no
    matter how many workers run the chunks.
    """
    if simulations < 1:
        raise ContractError("simulations must be >= 1")
    n = graph.node_count
    seeds = np.unique(np.asarray(list(seed_set), dtype=np.int64))
    if seeds.size and (seeds.min() < 0 or seeds.max() >= n):
        raise ContractError("seed outside graph")
    if seeds.size == 0 or n == 0:
        return SpreadEstimate(mean=0.0, std_error=0.0, simulations=simulations)

    weight_matrix = graph.in_matrix()
    sizes = [_CHUNK] * (simulations // _CHUNK)
    if simulations % _CHUNK:
        sizes.append(simulations % _CHUNK)
    streams = np.random.SeedSequence(rng_seed).spawn(len(sizes))

    def run_chunk(index):
        rng = np.random.Generator(np.random.PCG64(streams[index]))
        theta = _open_uniform(rng, (n, sizes[index]))
        active = np.zeros((n, sizes[index]), dtype=bool)
        active[seeds, :] = True
        settle_active_matrix(weight_matrix, theta, active)
        counts = active.sum(axis=0, dtype=np.int64)
        return int(counts.sum()), int((counts * counts).sum())

    nworkers = resolve_workers(workers)
    if nworkers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            partials = list(pool.map(run_chunk, range(len(sizes))))
    else:
        partials = [run_chunk(i) for i in range(len(sizes))]

    total = sum(p[0] for p in partials)
    total_sq = sum(p[1] for p in partials)
    mean = total / (simulations * n)
    if simulations > 1:
        var_counts = max(0.0, (total_sq - total * total / simulations)
                         / (simulations - 1))
        std_error = (var_counts ** 0.5) / (n * simulations ** 0.5)
    else:
        std_error = 0.0
    return SpreadEstimate(mean=mean, std_error=std_error,
                          simulations=simulations)


# ---------------------------------------------------------------------------
# Exact oracle by live-edge enumeration
# ---------------------------------------------------------------------------

MAX_EXACT_NODES = 16


def exact_spread(graph: Graph, seed_set, max_configurations: int = 2_000_000) -> float:
    """Exact expected active fraction on a tiny graph.

    Uses the live-edge view of threshold cascades: each node independently
    keeps at most one incoming arc, arc (u, v) with probability w(u, v) and
    no arc with the leftover probability. The expected spread is the
    probability-weighted mean reachable-set size over all configurations.
    """
    n = graph.node_count
    if n > MAX_EXACT_NODES:
        raise EnumerationError(
            f"exact_spread enumerates configurations and refuses N > "
            f"{MAX_EXACT_NODES} (got {n})")
    seeds = sorted({int(s) for s in seed_set})
    if seeds and (seeds[0] < 0 or seeds[-1] >= n):
        raise ContractError("seed outside graph")
    if n == 0:
        return 0.0

    parent_choices = []   # per node: candidate parent ids, -1 means none
    parent_probs = []
    total_configs = 1
    for v in range(n):
        sources, weights = graph.in_neighbors(v)
        ids = [int(s) for s in sources]
        probs = [float(w) for w in weights]
        leftover = 1.0 - sum(probs)
        if leftover > 1e-9 or not ids:
            ids.append(-1)
            probs.append(max(leftover, 0.0))
        parent_choices.append(ids)
        parent_probs.append(probs)
        total_configs *= len(ids)
        if total_configs > max_configurations:
            raise EnumerationError(
                f"live-edge enumeration needs {total_configs}+ configurations,"
                f" above the cap {max_configurations}")

    index_grid = np.array(
        list(itertools.product(*[range(len(c)) for c in parent_choices])),
        dtype=np.int64,
    ).reshape(total_configs, n)
    parents = np.empty((total_configs, n), dtype=np.int64)
    probs = np.empty((total_configs, n), dtype=np.float64)
    for v in range(n):
        parents[:, v] = np.asarray(parent_choices[v])[index_grid[:, v]]
        probs[:, v] = np.asarray(parent_probs[v])[index_grid[:, v]]
    config_prob = probs.prod(axis=1)

    active = np.zeros((total_configs, n), dtype=bool)
    if seeds:
        active[:, seeds] = True
    has_parent = parents >= 0
    safe_parents = np.where(has_parent, parents, 0)
    while True:
        parent_active = np.take_along_axis(active, safe_parents, axis=1)
        newly = has_parent & parent_active & ~active
        if not newly.any():
            break
        active |= newly
    sizes = active.sum(axis=1)
    return float((config_prob * sizes).sum() / n)
