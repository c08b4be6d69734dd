"""Graph representation, synthetic generators, and edge-list I/O.

Graphs are stored in compressed adjacency form with both arc directions
materialized. Every incoming weight of a node v equals 1 / indegree(v), so
the incoming weights of any reachable node sum to one. Undirected inputs
are stored as two directed arcs before weights are assigned, which makes
the threshold activation rule uniform across directed and undirected data.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, GraphLoadError

GENERATOR_MODELS = (
    "powerlaw-cluster",
    "barabasi-albert",
    "watts-strogatz",
    "erdos-renyi",
)

_MODEL_ALIASES = {
    "plc": "powerlaw-cluster",
    "powerlaw-cluster": "powerlaw-cluster",
    "ba": "barabasi-albert",
    "barabasi-albert": "barabasi-albert",
    "ws": "watts-strogatz",
    "watts-strogatz": "watts-strogatz",
    "er": "erdos-renyi",
    "erdos-renyi": "erdos-renyi",
}


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters for one synthetic graph draw.

    model: one of GENERATOR_MODELS (short aliases plc/ba/ws/er accepted).
    n: node count.
    m: attachment edges per node (ring half-width x2 for watts-strogatz);
       ignored by erdos-renyi.
    p: triangle probability (powerlaw-cluster), rewire probability
       (watts-strogatz), or edge probability (erdos-renyi).
    rng_seed: seed for the generator stream; identical configs produce
       identical graphs.
    """

    model: str
    n: int
    m: int = 4
    p: float = 0.05
    rng_seed: int = 0

    def canonical_model(self) -> str:
        key = self.model.lower()
        if key not in _MODEL_ALIASES:
            raise ConfigError(f"unknown generator model {self.model!r}")
        return _MODEL_ALIASES[key]


@dataclass(frozen=True)
class LoadReport:
    """Counts of input lines dropped while loading an edge list."""

    self_loops: int = 0
    duplicates: int = 0

    @property
    def drop_count(self) -> int:
        return self.self_loops + self.duplicates


class Graph:
    """Immutable weighted directed graph in CSR-like adjacency form.

    Construction happens through the class methods; after that the arrays
    must not be mutated, which makes instances safe for concurrent reads.
    Attributes:
        node_count: N.
        edge_count: M, the number of stored directed arcs (an undirected
            edge counts twice).
        directed: False when the arc set is a symmetrized undirected input.
        out_indptr / out_indices / out_weights: CSR arrays of outgoing arcs,
            targets sorted per source; out_weights[k] is the weight of the
            arc into out_indices[k], i.e. 1 / indegree(target).
        in_indptr / in_indices / in_weights: CSR arrays of incoming arcs,
            sources sorted per target.
        original_ids: compact-to-original id map from load_edge_list, or
            None for generated graphs.
        load_report: LoadReport from load_edge_list, or None.
    """

    def __init__(self, node_count, directed, out_csr, in_csr,
                 original_ids=None, load_report=None):
        self.node_count = int(node_count)
        self.directed = bool(directed)
        self.out_indptr, self.out_indices, self.out_weights = out_csr
        self.in_indptr, self.in_indices, self.in_weights = in_csr
        self.edge_count = int(self.out_indices.shape[0])
        self.original_ids = original_ids
        self.load_report = load_report
        self._cache = {}

    @classmethod
    def from_edges(cls, node_count, edges, directed=False,
                   original_ids=None, load_report=None):
        """Build a graph from integer (u, v) pairs.

        Self-loops and duplicate arcs are dropped silently here; callers
        that need drop accounting (the edge-list loader) count them before
        calling. Undirected edges are mirrored into two arcs.
        """
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= node_count):
            raise ConfigError("edge endpoint outside [0, node_count)")
        if not directed and arr.size:
            arr = np.vstack([arr, arr[:, ::-1]])
        if arr.size:
            arr = arr[arr[:, 0] != arr[:, 1]]
            arr = np.unique(arr, axis=0)
        src = arr[:, 0] if arr.size else np.zeros(0, dtype=np.int64)
        dst = arr[:, 1] if arr.size else np.zeros(0, dtype=np.int64)
        indeg = np.bincount(dst, minlength=node_count).astype(np.int64)
        weights = np.zeros(len(dst), dtype=np.float64)
        if len(dst):
            weights = 1.0 / indeg[dst]

        out_order = np.lexsort((dst, src))
        out_indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=node_count), out=out_indptr[1:])
        out_csr = (out_indptr, dst[out_order], weights[out_order])

        in_order = np.lexsort((src, dst))
        in_indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(indeg, out=in_indptr[1:])
        in_csr = (in_indptr, src[in_order], weights[in_order])

        return cls(node_count, directed, out_csr, in_csr,
                   original_ids=original_ids, load_report=load_report)

    def out_neighbors(self, v):
        lo, hi = self.out_indptr[v], self.out_indptr[v + 1]
        return self.out_indices[lo:hi], self.out_weights[lo:hi]

    def in_neighbors(self, v):
        lo, hi = self.in_indptr[v], self.in_indptr[v + 1]
        return self.in_indices[lo:hi], self.in_weights[lo:hi]

    @property
    def in_degrees(self):
        return np.diff(self.in_indptr)

    @property
    def out_strength(self):
        """Per-node sum of outgoing arc weights (cached)."""
        s = self._cache.get("out_strength")
        if s is None:
            src, _, w = self.arc_arrays()
            s = np.bincount(src, weights=w, minlength=self.node_count)
            self._cache["out_strength"] = s
        return s

    def in_matrix(self):
        """Weighted incoming-arc matrix W with W[v, u] = w(u, v), CSR."""
        mat = self._cache.get("in_matrix")
        if mat is None:
            mat = sp.csr_matrix(
                (self.in_weights, self.in_indices, self.in_indptr),
                shape=(self.node_count, self.node_count),
            )
            self._cache["in_matrix"] = mat
        return mat

    def arc_arrays(self):
        """All arcs as (sources, targets, weights) aligned arrays."""
        arcs = self._cache.get("arc_arrays")
        if arcs is None:
            src = np.repeat(
                np.arange(self.node_count, dtype=np.int64),
                np.diff(self.out_indptr),
            )
            arcs = (src, self.out_indices, self.out_weights)
            self._cache["arc_arrays"] = arcs
        return arcs

    def adjacency_lists(self):
        """Python-level out-adjacency [(targets, weights), ...] (cached)."""
        lists = self._cache.get("adjacency_lists")
        if lists is None:
            lists = []
            for v in range(self.node_count):
                lo, hi = self.out_indptr[v], self.out_indptr[v + 1]
                lists.append((self.out_indices[lo:hi].tolist(),
                              self.out_weights[lo:hi].tolist()))
            self._cache["adjacency_lists"] = lists
        return lists

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Graph(N={self.node_count}, arcs={self.edge_count}, {kind})"


def normalize_weights(graph: Graph) -> Graph:
    """Return a graph with incoming weights reset to 1 / indegree.

    Construction already applies this rule, so the call is idempotent; it
    exists for callers that assemble arc lists by hand.
    """
    src, dst, _ = graph.arc_arrays()
    pairs = np.stack([src, dst], axis=1)
    return Graph.from_edges(graph.node_count, pairs, directed=True,
                            original_ids=graph.original_ids,
                            load_report=graph.load_report)


def node_feature(graph: Graph, v: int, seed_set) -> np.ndarray:
    """Two-element feature of node v: [outgoing weight sum, is-seed flag]."""
    return np.array(
        [graph.out_strength[v], 1.0 if v in set(seed_set) else 0.0],
        dtype=np.float64,
    )


def node_features(graph: Graph, seed_set) -> np.ndarray:
    """Feature matrix (N, 2) for all nodes at once."""
    x = np.zeros((graph.node_count, 2), dtype=np.float64)
    x[:, 0] = graph.out_strength
    seeds = [s for s in seed_set]
    if seeds:
        x[np.asarray(seeds, dtype=np.int64), 1] = 1.0
    return x


# ---------------------------------------------------------------------------
# Synthetic generators
# ---------------------------------------------------------------------------


def generate(config: GeneratorConfig) -> Graph:
    """Draw a synthetic undirected graph and store it as directed arcs."""
    model = config.canonical_model()
    if config.n < 1:
        raise ConfigError("n must be positive")
    rng = np.random.default_rng(config.rng_seed)
    if model == "erdos-renyi":
        if not 0.0 <= config.p <= 1.0:
            raise ConfigError("edge probability must lie in [0, 1]")
        edges = _erdos_renyi(config.n, config.p, rng)
    elif model == "barabasi-albert":
        _check_attachment(config)
        edges = _preferential_attachment(config.n, config.m, 0.0, rng)
    elif model == "powerlaw-cluster":
        _check_attachment(config)
        if not 0.0 <= config.p <= 1.0:
            raise ConfigError("triangle probability must lie in [0, 1]")
        edges = _preferential_attachment(config.n, config.m, config.p, rng)
    else:
        if config.m < 0 or config.m >= config.n:
            raise ConfigError("watts-strogatz needs 0 <= m < n")
        if not 0.0 <= config.p <= 1.0:
            raise ConfigError("rewire probability must lie in [0, 1]")
        edges = _watts_strogatz(config.n, config.m, config.p, rng)
    return Graph.from_edges(config.n, edges, directed=False)


def _check_attachment(config):
    if config.m < 1:
        raise ConfigError("m must be at least 1")
    if config.n < config.m + 1:
        raise ConfigError(
            f"attachment models need n >= m + 1, got n={config.n} m={config.m}"
        )


def _erdos_renyi(n, p, rng):
    edges = []
    for u in range(n - 1):
        mask = rng.random(n - u - 1) < p
        for off in np.flatnonzero(mask):
            edges.append((u, u + 1 + int(off)))
    return edges


def _preferential_attachment(n, m, triangle_p, rng):
    """Growth with preferential attachment; triangle_p > 0 adds the
    triad-formation step of the powerlaw-cluster construction."""
    edges = []
    adjacency = [set() for _ in range(n)]
    repeated = []  # endpoint multiset; uniform draws give degree bias

    def link(u, v):
        edges.append((u, v))
        adjacency[u].add(v)
        adjacency[v].add(u)

    def attach(exclude):
        while True:
            cand = repeated[int(rng.integers(len(repeated)))]
            if cand not in exclude:
                return cand

    for source in range(m, n):
        linked = []
        taken = {source}
        if source == m:
            # first arrival: the m founder nodes all have degree zero
            for t in range(m):
                link(source, t)
                linked.append(t)
                taken.add(t)
        else:
            prev = attach(taken)
            link(source, prev)
            linked.append(prev)
            taken.add(prev)
            while len(linked) < m:
                if triangle_p > 0.0 and rng.random() < triangle_p:
                    pool = sorted(adjacency[prev] - taken)
                    if pool:
                        w = pool[int(rng.integers(len(pool)))]
                        link(source, w)
                        linked.append(w)
                        taken.add(w)
                        continue
                prev = attach(taken)
                link(source, prev)
                linked.append(prev)
                taken.add(prev)
        repeated.extend(linked)
        repeated.extend([source] * len(linked))
    return edges


def _watts_strogatz(n, m, p, rng):
    half = m // 2
    targets = [set() for _ in range(n)]

    def has(u, v):
        return v in targets[u] or u in targets[v]

    for u in range(n):
        for j in range(1, half + 1):
            targets[u].add((u + j) % n)
    for u in range(n):
        for v in sorted(targets[u]):
            if p > 0.0 and rng.random() < p:
                w = int(rng.integers(n))
                tries = 0
                while (w == u or has(u, w)) and tries < 8 * n:
                    w = int(rng.integers(n))
                    tries += 1
                if w != u and not has(u, w):
                    targets[u].discard(v)
                    targets[u].add(w)
    edges = []
    for u in range(n):
        for v in sorted(targets[u]):
            edges.append((u, v))
    return edges


# ---------------------------------------------------------------------------
# Edge-list I/O
# ---------------------------------------------------------------------------


def load_edge_list(path, directed=False) -> Graph:
    """Parse a "u v" per-line text file into a Graph.

    Node ids may be arbitrary non-negative integers; they are compacted to
    0..N-1 with the original ids kept on the graph. Lines starting with '#'
    and blank lines are skipped. Self-loops and duplicate edges are dropped
    and counted in the attached LoadReport.
    """
    pairs = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphLoadError(
                    f"expected two node ids, got {line!r}", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphLoadError(
                    f"non-integer node id in {line!r}", lineno) from None
            if u < 0 or v < 0:
                raise GraphLoadError(
                    f"negative node id in {line!r}", lineno)
            pairs.append((u, v))

    ids = sorted({u for u, _ in pairs} | {v for _, v in pairs})
    id_of = {orig: i for i, orig in enumerate(ids)}
    original_ids = np.asarray(ids, dtype=np.int64)

    self_loops = 0
    duplicates = 0
    seen = set()
    edges = []
    for u, v in pairs:
        if u == v:
            self_loops += 1
            continue
        cu, cv = id_of[u], id_of[v]
        key = (cu, cv) if directed else (min(cu, cv), max(cu, cv))
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        edges.append((cu, cv))

    report = LoadReport(self_loops=self_loops, duplicates=duplicates)
    return Graph.from_edges(len(ids), edges, directed=directed,
                            original_ids=original_ids, load_report=report)


def save_edge_list(graph: Graph, path) -> None:
    """Write the graph in the same "u v" text format the loader reads.

    Undirected graphs list each edge once; original node ids are restored
    when the graph came from load_edge_list.
    """
    ids = graph.original_ids
    if ids is None:
        ids = np.arange(graph.node_count, dtype=np.int64)
    src, dst, _ = graph.arc_arrays()
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as handle:
        kind = "directed" if graph.directed else "undirected"
        handle.write(f"# nodes {graph.node_count} arcs {graph.edge_count} {kind}\n")
        for u, v in zip(src.tolist(), dst.tolist()):
            if not graph.directed and u > v:
                continue
            handle.write(f"{ids[u]} {ids[v]}\n")
    os.replace(tmp, path)
