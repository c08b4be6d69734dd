"""Message-passing node embeddings with an aggregate state row.

Every node starts from the two raw features [outgoing weight sum, is-seed]
projected through W1. Each layer sums a node's in-neighbor embeddings,
applies the pair of half-width projections W2 (self) and W3 (neighborhood),
concatenates them back to full width, applies ReLU, and L2-normalizes each
row. One extra virtual row aggregates over all real nodes and acts as the
whole-graph state; real nodes never receive messages from it, so their
embeddings are independent of graph size.

The forward pass caches every intermediate needed for an exact reverse-mode
gradient, implemented by hand in `encode_backward`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, StateError
from .graphs import Graph, node_features

FEATURE_DIM = 2


@dataclass
class EncoderParams:
    """Weights of the embedding network: W1 (c, d), W2 and W3 (d, d/2)."""

    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray

    @property
    def dim(self) -> int:
        return self.W1.shape[1]

    def validate(self):
        c, d = self.W1.shape
        if c != FEATURE_DIM:
            raise ParameterError(f"W1 must have {FEATURE_DIM} input rows")
        if d % 2 != 0:
            raise ParameterError("embedding dimension must be even")
        if self.W2.shape != (d, d // 2) or self.W3.shape != (d, d // 2):
            raise ParameterError("W2/W3 must map d to d/2")
        for name in ("W1", "W2", "W3"):
            if not np.isfinite(getattr(self, name)).all():
                raise ParameterError(f"{name} contains non-finite entries")

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.W1.copy(), self.W2.copy(), self.W3.copy())


def init_encoder_params(dim: int, rng, scale: float = 0.05) -> EncoderParams:
    """Uniform(-scale, scale) initialization of all encoder weights."""
    if dim % 2 != 0:
        raise ParameterError("embedding dimension must be even")
    params = EncoderParams(
        W1=rng.uniform(-scale, scale, size=(FEATURE_DIM, dim)),
        W2=rng.uniform(-scale, scale, size=(dim, dim // 2)),
        W3=rng.uniform(-scale, scale, size=(dim, dim // 2)),
    )
    params.validate()
    return params


@dataclass
class EncoderGradients:
    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray
    inputs: np.ndarray


@dataclass
class EmbeddingTable:
    """Final embeddings plus the cached forward trajectory.

    z has one row per real node and a last row for the aggregate state;
    every nonzero row is unit length. The cache lists (one entry per layer)
    stay attached for encode_backward and can be dropped with
    release_cache() when only the embeddings are needed. Batched tables
    (from encode_batch) stack several graphs block-diagonally; their state
    rows sit at the end of each block.
    """

    z: np.ndarray
    graph: Graph | None
    params: EncoderParams
    aggregation: object = field(default=None, repr=False)
    aggregation_t: object = field(default=None, repr=False)
    inputs: np.ndarray | None = None
    layers: list | None = field(default=None, repr=False)
    neighbor_sums: list | None = field(default=None, repr=False)
    relu_masks: list | None = field(default=None, repr=False)
    norms: list | None = field(default=None, repr=False)

    @property
    def state_vector(self) -> np.ndarray:
        return self.z[-1]

    def release_cache(self):
        self.inputs = None
        self.layers = None
        self.neighbor_sums = None
        self.relu_masks = None
        self.norms = None


def _aggregation_matrix(graph: Graph):
    """(N+1, N+1) unweighted matrix: row v lists v's in-neighbors, the last
    row sums over all real nodes. Cached per graph with its transpose."""
    cached = graph._cache.get("aggregation")
    if cached is None:
        n = graph.node_count
        indptr = np.concatenate([
            graph.in_indptr,
            [graph.in_indptr[-1] + n],
        ]).astype(np.int64)
        indices = np.concatenate([
            graph.in_indices,
            np.arange(n, dtype=np.int64),
        ])
        data = np.ones(len(indices), dtype=np.float64)
        forward = sp.csr_matrix((data, indices, indptr), shape=(n + 1, n + 1))
        cached = (forward, forward.T.tocsr())
        graph._cache["aggregation"] = cached
    return cached


def _normalize_rows(pre):
    norms = np.sqrt(np.einsum("ij,ij->i", pre, pre))
    safe = np.where(norms > 0.0, norms, 1.0)
    return pre / safe[:, None], norms


def _normalize_rows_backward(grad, normalized, norms):
    """Jacobian-transpose of row normalization; zero rows pass zero."""
    dots = np.einsum("ij,ij->i", grad, normalized)
    out = (grad - dots[:, None] * normalized)
    out /= np.where(norms > 0.0, norms, 1.0)[:, None]
    out[norms == 0.0] = 0.0
    return out


def _forward(x, aggregate, aggregate_t, graph, params, depth):
    pre = x @ params.W1
    mask = pre > 0.0
    h, norms = _normalize_rows(pre * mask)
    layers = [h]
    relu_masks = [mask]
    norm_list = [norms]
    neighbor_sums = []
    for _ in range(depth):
        summed = aggregate @ layers[-1]
        pre = np.concatenate(
            [layers[-1] @ params.W2, summed @ params.W3], axis=1)
        mask = pre > 0.0
        h, norms = _normalize_rows(pre * mask)
        neighbor_sums.append(summed)
        layers.append(h)
        relu_masks.append(mask)
        norm_list.append(norms)

    z = layers[-1]
    if not np.isfinite(z).all():
        raise FloatingPointError(
            f"non-finite embedding (depth={depth}, rows={z.shape[0]})")
    return EmbeddingTable(z=z, graph=graph, params=params,
                          aggregation=aggregate, aggregation_t=aggregate_t,
                          inputs=x, layers=layers,
                          neighbor_sums=neighbor_sums,
                          relu_masks=relu_masks, norms=norm_list)


def encode(graph: Graph, seed_set, params: EncoderParams, depth: int) -> EmbeddingTable:
    """Embed all real nodes and the aggregate state row.

    depth is the number of message-passing layers (at least 1). Neighbor
    sums run over in-neighbors with CSR index order fixed, so relabeling
    nodes permutes the embedding rows up to float round-off.
    """
    params.validate()
    if depth < 1:
        raise ParameterError("depth must be >= 1")
    n = graph.node_count
    x = np.zeros((n + 1, FEATURE_DIM), dtype=np.float64)
    x[:n] = node_features(graph, seed_set)
    aggregate, aggregate_t = _aggregation_matrix(graph)
    return _forward(x, aggregate, aggregate_t, graph, params, depth)


def encode_batch(cases, params: EncoderParams, depth: int):
    """Embed several (graph, seed_set) cases in one block-diagonal pass.

    Returns (table, offsets): block i occupies rows
    offsets[i]:offsets[i + 1], with its state row at offsets[i + 1] - 1.
    Row-for-row this matches per-case encode up to float round-off from
    BLAS blocking; the math is identical.
    """
    params.validate()
    if depth < 1:
        raise ParameterError("depth must be >= 1")
    if not cases:
        raise ParameterError("encode_batch needs at least one case")
    sizes = np.array([graph.node_count + 1 for graph, _ in cases],
                     dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])

    x = np.zeros((total, FEATURE_DIM), dtype=np.float64)
    fwd_parts = []
    bwd_parts = []
    for i, (graph, seeds) in enumerate(cases):
        x[offsets[i]:offsets[i + 1] - 1] = node_features(graph, seeds)
        forward, backward = _aggregation_matrix(graph)
        fwd_parts.append(forward)
        bwd_parts.append(backward)
    aggregate = _block_diagonal(fwd_parts, offsets, total)
    aggregate_t = _block_diagonal(bwd_parts, offsets, total)
    table = _forward(x, aggregate, aggregate_t, None, params, depth)
    return table, offsets


def _block_diagonal(parts, offsets, total):
    nnz = np.array([p.indptr[-1] for p in parts], dtype=np.int64)
    nnz_offsets = np.concatenate([[0], np.cumsum(nnz)])
    indices = np.concatenate(
        [p.indices.astype(np.int64) + offsets[i] for i, p in enumerate(parts)])
    indptr = np.concatenate(
        [[0]] + [p.indptr[1:].astype(np.int64) + nnz_offsets[i]
                 for i, p in enumerate(parts)])
    data = np.ones(len(indices), dtype=np.float64)
    return sp.csr_matrix((data, indices, indptr), shape=(total, total))


def encode_backward(table: EmbeddingTable, grad_z: np.ndarray) -> EncoderGradients:
    """Exact gradients of the forward pass for an upstream d(loss)/dz."""
    if table.layers is None:
        raise StateError("embedding cache was released; re-run encode")
    params = table.params
    depth = len(table.neighbor_sums)
    grad_z = np.asarray(grad_z, dtype=np.float64)
    if grad_z.shape != table.z.shape:
        raise ParameterError("upstream gradient shape mismatch")
    aggregate_t = table.aggregation_t
    half = params.dim // 2

    d_w2 = np.zeros_like(params.W2)
    d_w3 = np.zeros_like(params.W3)

    grad = grad_z
    for layer in range(depth, 0, -1):
        grad = _normalize_rows_backward(
            grad, table.layers[layer], table.norms[layer])
        grad = grad * table.relu_masks[layer]
        grad_self = grad[:, :half]
        grad_neigh = grad[:, half:]
        d_w2 += table.layers[layer - 1].T @ grad_self
        d_w3 += table.neighbor_sums[layer - 1].T @ grad_neigh
        grad = grad_self @ params.W2.T + aggregate_t @ (grad_neigh @ params.W3.T)

    grad = _normalize_rows_backward(grad, table.layers[0], table.norms[0])
    grad = grad * table.relu_masks[0]
    d_w1 = table.inputs.T @ grad
    d_inputs = grad @ params.W1.T
    return EncoderGradients(W1=d_w1, W2=d_w2, W3=d_w3, inputs=d_inputs)
