"""Q-value decoding, the training loss, and replay machinery.

The decoder scores an action node a against the aggregate state row:
Q(s, a) = W5' ReLU((z_s . W4) z_a), i.e. a scalar gate from the state
scaling the action embedding. The loss combines the squared n-step TD error
with an adjacency smoothing term alpha * sum over arcs w(i, j) ||z_i -
z_j||^2 that pulls connected embeddings together; both terms backpropagate
through the encoder, the TD bootstrap never does (it comes from the frozen
target copy).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .encoder import (EncoderParams, encode, encode_backward, encode_batch,
                      init_encoder_params)
from .errors import ContractError, ParameterError
from .graphs import Graph

PARAM_KEYS = ("W1", "W2", "W3", "W4", "W5")


@dataclass
class DecoderParams:
    """Decoder weights, both of shape (d, 1)."""

    W4: np.ndarray
    W5: np.ndarray

    def validate(self, dim):
        if self.W4.shape != (dim, 1) or self.W5.shape != (dim, 1):
            raise ParameterError("decoder weights must be (d, 1)")
        if not (np.isfinite(self.W4).all() and np.isfinite(self.W5).all()):
            raise ParameterError("decoder weights contain non-finite entries")

    def copy(self) -> "DecoderParams":
        return DecoderParams(self.W4.copy(), self.W5.copy())


def init_decoder_params(dim: int, rng, scale: float = 0.05) -> DecoderParams:
    # W4 starts positive: embeddings are nonnegative, so a nonpositive
    # state gate would zero every Q through the ReLU and no TD gradient
    # could ever revive the decoder.
    return DecoderParams(
        W4=rng.uniform(0.0, scale, size=(dim, 1)),
        W5=rng.uniform(-scale, scale, size=(dim, 1)),
    )


@dataclass
class QNetParams:
    """Online encoder/decoder weights plus their frozen target mirror."""

    encoder: EncoderParams
    decoder: DecoderParams
    target_encoder: EncoderParams
    target_decoder: DecoderParams
    steps_since_sync: int = 0

    @property
    def dim(self) -> int:
        return self.encoder.dim

    @classmethod
    def initialize(cls, dim: int, rng_seed, scale: float = 0.05) -> "QNetParams":
        rng = np.random.default_rng(rng_seed)
        encoder = init_encoder_params(dim, rng, scale)
        decoder = init_decoder_params(dim, rng, scale)
        decoder.validate(dim)
        return cls(encoder=encoder, decoder=decoder,
                   target_encoder=encoder.copy(),
                   target_decoder=decoder.copy())

    def get(self, key: str) -> np.ndarray:
        owner = self.encoder if key in ("W1", "W2", "W3") else self.decoder
        return getattr(owner, key)


def sync_target(params: QNetParams) -> None:
    """Reset the target mirror to a deep copy of the online weights."""
    params.target_encoder = params.encoder.copy()
    params.target_decoder = params.decoder.copy()
    params.steps_since_sync = 0


def q_values_at(table, decoder: DecoderParams, state_row: int,
                candidate_rows) -> np.ndarray:
    """Q scores against an explicit state row; used for batched tables."""
    gate = float(table.z[state_row] @ decoder.W4.ravel())
    gated = gate * table.z[candidate_rows]
    q = np.maximum(gated, 0.0) @ decoder.W5.ravel()
    if not np.isfinite(q).all():
        raise FloatingPointError("non-finite Q values")
    return q


def q_values(table, decoder: DecoderParams, candidates) -> np.ndarray:
    """Q(s, a) for each candidate node id, as one flat array."""
    candidates = np.asarray(list(candidates), dtype=np.int64)
    if candidates.size == 0:
        raise ContractError("candidate set is empty")
    return q_values_at(table, decoder, table.z.shape[0] - 1, candidates)


def reward(graph: Graph, state) -> float:
    """Negative inactive rate of a settled cascade, in [-1, 0]."""
    return state.active_fraction - 1.0


@dataclass(frozen=True)
class Experience:
    """n-step transition on one graph.

    seeds_before is the seed set when the action was taken, seeds_after the
    set n steps later (or at termination), reward_sum the realized rewards
    accumulated over that horizon.
    """

    graph: Graph
    seeds_before: tuple
    action: int
    reward_sum: float
    seeds_after: tuple
    terminal: bool

    def __post_init__(self):
        if self.action in self.seeds_before:
            raise ContractError("action already in the seed set")


class ReplayBuffer:
    """Ring buffer with FIFO eviction and uniform sampling with replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ContractError("capacity must be positive")
        self.capacity = capacity
        self._items = []
        self._next = 0

    def __len__(self):
        return len(self._items)

    def push(self, experience: Experience):
        if len(self._items) < self.capacity:
            self._items.append(experience)
        else:
            self._items[self._next] = experience
            self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng):
        """A batch of experiences, or None while under-filled (defer)."""
        if len(self._items) < batch_size:
            return None
        picks = rng.integers(len(self._items), size=batch_size)
        return [self._items[int(i)] for i in picks]


def _candidate_ids(graph: Graph, seeds) -> np.ndarray:
    mask = np.ones(graph.node_count, dtype=bool)
    if seeds:
        mask[np.asarray(seeds, dtype=np.int64)] = False
    return np.flatnonzero(mask)


def td_target(experience: Experience, params: QNetParams, gamma: float,
              depth: int) -> float:
    """n-step bootstrap target; terminal transitions use the raw reward sum.

    The bootstrap term encodes the later seed configuration with the target
    weights and maximizes over non-seed candidates, so it is unaffected by
    online updates between target syncs.
    """
    if experience.terminal:
        return experience.reward_sum
    table = encode(experience.graph, experience.seeds_after,
                   params.target_encoder, depth)
    candidates = _candidate_ids(experience.graph, experience.seeds_after)
    q = q_values(table, params.target_decoder, candidates)
    return experience.reward_sum + gamma * float(q.max())


def _batched_targets(batch, params: QNetParams, gamma: float,
                     depth: int) -> np.ndarray:
    """TD targets for a whole batch with one target-network encode."""
    ys = np.array([exp.reward_sum for exp in batch], dtype=np.float64)
    open_ids = [i for i, exp in enumerate(batch) if not exp.terminal]
    if not open_ids:
        return ys
    cases = [(batch[i].graph, batch[i].seeds_after) for i in open_ids]
    table, offsets = encode_batch(cases, params.target_encoder, depth)
    z = table.z
    state_rows = offsets[1:] - 1
    gates = z[state_rows] @ params.target_decoder.W4.ravel()
    gate_per_row = np.repeat(gates, np.diff(offsets))
    scores = (np.maximum(gate_per_row[:, None] * z, 0.0)
              @ params.target_decoder.W5.ravel())
    scores[state_rows] = -np.inf
    seed_rows = [offsets[slot] + np.asarray(batch[i].seeds_after, dtype=np.int64)
                 for slot, i in enumerate(open_ids) if batch[i].seeds_after]
    if seed_rows:
        scores[np.concatenate(seed_rows)] = -np.inf
    maxes = np.maximum.reduceat(scores, offsets[:-1])
    if not np.isfinite(maxes).all():
        raise FloatingPointError("non-finite TD bootstrap")
    ys[open_ids] += gamma * maxes
    return ys


def loss_and_gradients(batch, params: QNetParams, gamma: float, alpha: float,
                       depth: int):
    """Mean loss over a batch and gradients for all five weight matrices.

    Per experience: (y - Q(s_t, a_t))^2 + alpha * sum_{(i,j) in arcs}
    w(i, j) ||z_i - z_j||^2, averaged over the batch. The whole batch runs
    as one block-diagonal encode, so a duplicated experience contributes
    exactly twice one copy's gradient. Returns (loss, {key: gradient}).
    """
    if not batch:
        raise ContractError("batch is empty")
    scale = 1.0 / len(batch)
    grads = {key: np.zeros_like(params.get(key)) for key in PARAM_KEYS}
    w4 = params.decoder.W4.ravel()
    w5 = params.decoder.W5.ravel()

    ys = _batched_targets(batch, params, gamma, depth)
    table, offsets = encode_batch(
        [(exp.graph, exp.seeds_before) for exp in batch],
        params.encoder, depth)
    z = table.z
    grad_z = np.zeros_like(z)

    # decoder forward/backward, all experiences at once; every block owns
    # distinct rows so the scatter back into grad_z cannot collide
    state_rows = offsets[1:] - 1
    action_rows = offsets[:-1] + np.array([exp.action for exp in batch],
                                          dtype=np.int64)
    states = z[state_rows]
    actions = z[action_rows]
    gates = states @ w4
    gated = gates[:, None] * actions
    relu_gated = np.maximum(gated, 0.0)
    qs = relu_gated @ w5
    deltas = ys - qs
    total = float(deltas @ deltas)

    dq = -2.0 * scale * deltas
    grads["W5"] = (relu_gated * dq[:, None]).sum(axis=0)[:, None]
    d_gated = (dq[:, None] * w5[None, :]) * (gated > 0.0)
    d_gates = np.einsum("ij,ij->i", d_gated, actions)
    grads["W4"] = (states * d_gates[:, None]).sum(axis=0)[:, None]
    grad_z[action_rows] += d_gated * gates[:, None]
    grad_z[state_rows] += d_gates[:, None] * w4[None, :]

    if alpha != 0.0:
        unions = _union_smoothing(batch, offsets, z.shape[0])
        if unions is not None:
            # sum over arcs w(i,j)||z_i - z_j||^2 in Laplacian form:
            # sum_i c_i||z_i||^2 - 2 sum_arcs w(i,j) z_i.z_j
            weight_union, weight_union_t, degree_union = unions
            incoming = weight_union @ z
            cross = float(np.einsum("ij,ij->", z, incoming))
            self_sq = float(degree_union @ np.einsum("ij,ij->i", z, z))
            total += alpha * (self_sq - 2.0 * cross)
            outgoing = weight_union_t @ z
            grad_z += (2.0 * alpha * scale) * (
                degree_union[:, None] * z - incoming - outgoing)

    enc_grads = encode_backward(table, grad_z)
    grads["W1"] = enc_grads.W1
    grads["W2"] = enc_grads.W2
    grads["W3"] = enc_grads.W3

    loss = total * scale
    if not np.isfinite(loss):
        raise FloatingPointError("loss is non-finite")
    return loss, grads


def _smoothing_parts(graph: Graph):
    """Cached per-graph pieces of the smoothing term, padded with the
    state row: incoming-weight matrix W[v, u] = w(u, v) of shape
    (N+1, N+1) and the degree vector c_v = out_strength_v + [indeg_v > 0].
    """
    parts = graph._cache.get("smoothing")
    if parts is None:
        n = graph.node_count
        indptr = np.concatenate([graph.in_indptr,
                                 [graph.in_indptr[-1]]]).astype(np.int64)
        matrix = sp.csr_matrix(
            (graph.in_weights, graph.in_indices.astype(np.int64), indptr),
            shape=(n + 1, n + 1))
        degree = np.concatenate([
            graph.out_strength + (graph.in_degrees > 0), [0.0]])
        parts = (matrix, matrix.T.tocsr(), degree)
        graph._cache["smoothing"] = parts
    return parts


def _union_smoothing(batch, offsets, total_rows):
    """Block-diagonal smoothing matrix, its transpose, and degree vector."""
    any_arcs = any(exp.graph.edge_count for exp in batch)
    if not any_arcs:
        return None
    indices_parts = []
    indptr_parts = [np.zeros(1, dtype=np.int64)]
    data_parts = []
    degree_parts = []
    nnz = 0
    transposed_indices = []
    transposed_indptr = [np.zeros(1, dtype=np.int64)]
    transposed_data = []
    nnz_t = 0
    for i, exp in enumerate(batch):
        forward, backward, degree = _smoothing_parts(exp.graph)
        indices_parts.append(forward.indices.astype(np.int64) + offsets[i])
        indptr_parts.append(forward.indptr[1:].astype(np.int64) + nnz)
        data_parts.append(forward.data)
        nnz += forward.indptr[-1]
        transposed_indices.append(backward.indices.astype(np.int64) + offsets[i])
        transposed_indptr.append(backward.indptr[1:].astype(np.int64) + nnz_t)
        transposed_data.append(backward.data)
        nnz_t += backward.indptr[-1]
        degree_parts.append(degree)
    weight_union = sp.csr_matrix(
        (np.concatenate(data_parts), np.concatenate(indices_parts),
         np.concatenate(indptr_parts)), shape=(total_rows, total_rows))
    weight_union_t = sp.csr_matrix(
        (np.concatenate(transposed_data), np.concatenate(transposed_indices),
         np.concatenate(transposed_indptr)), shape=(total_rows, total_rows))
    degree_union = np.concatenate(degree_parts)
    return weight_union, weight_union_t, degree_union


@dataclass
class AdamState:
    """Adam moments for the five weight matrices, applied in a fixed order."""

    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def initialize(cls, params: QNetParams, learning_rate: float = 1e-4) -> "AdamState":
        state = cls(learning_rate=learning_rate)
        for key in PARAM_KEYS:
            state.m[key] = np.zeros_like(params.get(key))
            state.v[key] = np.zeros_like(params.get(key))
        return state

    def apply(self, params: QNetParams, grads: dict) -> None:
        self.step_count += 1
        correct1 = 1.0 - self.beta1 ** self.step_count
        correct2 = 1.0 - self.beta2 ** self.step_count
        for key in PARAM_KEYS:
            g = grads[key]
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[key] / correct1
            v_hat = self.v[key] / correct2
            params.get(key)[...] -= (
                self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon))
