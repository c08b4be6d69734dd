"""Episode generation, n-step experience assembly, and the training loop.

Each episode samples a fresh synthetic graph and a single threshold
realization, then adds seeds epsilon-greedily until every node is active;
per-step rewards come from the incrementally extended cascade under that
fixed realization, which keeps the episode a proper decision process.
Gradient steps run once per iteration (after a warm-up fill of the replay
buffer), one episode of interaction runs every `interact_every` iterations,
and validation replays a frozen set of held-out graphs greedily to track
the quality metric: the normalized area under the inactive-rate curve.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .checkpoint import save_checkpoint
from .diffusion import ThresholdRealization, sample_realization, simulate, simulate_incremental
from .encoder import encode, encode_batch
from .errors import ConfigError
from .graphs import GeneratorConfig, generate
from .qnet import (AdamState, Experience, QNetParams, ReplayBuffer,
                   loss_and_gradients, q_values, q_values_at, reward,
                   sync_target)

log = logging.getLogger(__name__)

# Spawn order of the per-purpose RNG streams under the root seed.
_STREAM_PARAMS = 0
_STREAM_EPISODES = 1
_STREAM_VALIDATION = 2
_STREAM_SAMPLING = 3

LOG_COLUMNS = ("iteration", "episode", "loss", "val_return")


@dataclass(frozen=True)
class TrainConfig:
    """Training hyper-parameters; defaults target 30-50 node graphs."""

    rng_seed: int = 0
    max_iterations: int = 50_000
    episode_budget: int = 1_000_000
    scale_min: int = 30
    scale_max: int = 50
    gen_m: int = 4
    gen_p: float = 0.05
    embedding_dim: int = 64
    layers: int = 3
    n_step: int = 5
    batch_size: int = 64
    replay_capacity: int = 500_000
    warmup_experiences: int = 1000
    interact_every: int = 10
    validate_every: int = 300
    validation_graphs: int = 100
    learning_rate: float = 1e-4
    gamma: float = 1.0
    alpha: float = 1e-3
    sync_every: int = 1000
    epsilon_start: float = 1.0
    epsilon_final: float = 0.05
    epsilon_decay_episodes: int | None = None
    init_scale: float = 0.05
    checkpoint_dir: str = "checkpoints"

    def validate(self):
        if self.n_step < 1:
            raise ConfigError("n_step must be >= 1")
        if self.scale_min < 2 or self.scale_max < self.scale_min:
            raise ConfigError("invalid graph scale range")
        if min(self.interact_every, self.validate_every,
               self.max_iterations, self.batch_size) < 1:
            raise ConfigError("periods and sizes must be >= 1")
        if not 0.0 <= self.epsilon_final <= self.epsilon_start <= 1.0:
            raise ConfigError("epsilon schedule must stay within [0, 1]")
        if self.embedding_dim % 2 != 0:
            raise ConfigError("embedding_dim must be even")

    def decay_episodes(self) -> int:
        """Exploration decays over roughly the first tenth of the run."""
        if self.epsilon_decay_episodes is not None:
            return max(1, self.epsilon_decay_episodes)
        scheduled = self.max_iterations // self.interact_every
        return max(1, min(self.episode_budget, scheduled) // 10)

    def epsilon_at(self, episode_index: int) -> float:
        horizon = self.decay_episodes()
        frac = min(1.0, episode_index / horizon)
        return self.epsilon_start + frac * (self.epsilon_final - self.epsilon_start)


@dataclass
class EpisodeTrace:
    """One complete interaction: actions until full activation."""

    graph: object
    realization: ThresholdRealization
    actions: tuple
    rewards: tuple
    sigmas: tuple

    @property
    def k_star(self) -> int:
        return len(self.actions)


def _argmax_q(table, decoder, candidates):
    q = q_values(table, decoder, candidates)
    return int(candidates[int(np.argmax(q))])  # candidates ascending: ties pick smaller id


def _sample_graph(config: TrainConfig, rng):
    n = int(rng.integers(config.scale_min, config.scale_max + 1))
    seed = int(rng.integers(2 ** 63 - 1))
    return generate(GeneratorConfig(model="powerlaw-cluster", n=n,
                                    m=config.gen_m, p=config.gen_p,
                                    rng_seed=seed))


def run_episode(params: QNetParams, config: TrainConfig, rng,
                epsilon: float | None = None, graph=None,
                realization=None) -> EpisodeTrace:
    """Roll one episode to full activation.

    Draws a graph and a threshold realization from rng unless they are
    supplied; actions are epsilon-greedy over non-seed nodes with Q-value
    ties broken by the smaller node id.
    """
    if epsilon is None:
        epsilon = config.epsilon_start
    if graph is None:
        graph = _sample_graph(config, rng)
    if realization is None:
        theta_seed = int(rng.integers(2 ** 63 - 1))
        realization = sample_realization(graph, theta_seed)
    state = simulate(graph, (), realization)
    seeds = []
    actions = []
    rewards = []
    sigmas = []
    not_seed = np.ones(graph.node_count, dtype=bool)
    while not state.active.all():
        candidates = np.flatnonzero(not_seed)
        if epsilon > 0.0 and rng.random() < epsilon:
            action = int(candidates[int(rng.integers(len(candidates)))])
        else:
            table = encode(graph, seeds, params.encoder, config.layers)
            action = _argmax_q(table, params.decoder, candidates)
        state = simulate_incremental(graph, state, action)
        seeds.append(action)
        not_seed[action] = False
        actions.append(action)
        sigmas.append(state.active_fraction)
        rewards.append(reward(graph, state))
    return EpisodeTrace(graph=graph, realization=realization,
                        actions=tuple(actions), rewards=tuple(rewards),
                        sigmas=tuple(sigmas))


def assemble_experiences(trace: EpisodeTrace, n_step: int):
    """Slice an episode into n-step transitions.

    Step t gets horizon min(n_step, k* - t); transitions whose horizon
    reaches the end of the episode are terminal.
    """
    k_star = trace.k_star
    experiences = []
    for t in range(k_star):
        horizon = min(n_step, k_star - t)
        experiences.append(Experience(
            graph=trace.graph,
            seeds_before=trace.actions[:t],
            action=trace.actions[t],
            reward_sum=float(sum(trace.rewards[t:t + horizon])),
            seeds_after=trace.actions[:t + horizon],
            terminal=t + n_step >= k_star,
        ))
    return experiences


def greedy_rollout(params: QNetParams, graph, realization,
                   depth: int) -> EpisodeTrace:
    """Deterministic (epsilon = 0) rollout under a fixed realization."""
    config = replace(TrainConfig(), layers=depth)
    return run_episode(params, config, rng=np.random.default_rng(0),
                       epsilon=0.0, graph=graph, realization=realization)


def compute_return(params: QNetParams, graph, realization,
                   depth: int = 3) -> float:
    """Normalized area under the inactive-rate curve of a greedy rollout.

    Return = (1/N) * sum_k (1 - sigma_k) over the k* steps needed to reach
    full activation; identically -(1/N) * sum of the per-step rewards.
    """
    trace = greedy_rollout(params, graph, realization, depth)
    n = graph.node_count
    return float(sum(1.0 - s for s in trace.sigmas) / n)


def build_validation_set(config: TrainConfig):
    """Frozen held-out (graph, realization) pairs derived from the run seed.

    Uses a dedicated RNG stream so episode sampling never touches these
    graphs.
    """
    root = np.random.SeedSequence(config.rng_seed)
    stream = root.spawn(4)[_STREAM_VALIDATION]
    rng = np.random.Generator(np.random.PCG64(stream))
    cases = []
    for _ in range(config.validation_graphs):
        graph = _sample_graph(config, rng)
        theta_seed = int(rng.integers(2 ** 63 - 1))
        cases.append((graph, sample_realization(graph, theta_seed)))
    return cases


def batched_greedy_rollouts(params: QNetParams, cases, depth: int):
    """Greedy rollouts of many (graph, realization) cases in lockstep.

    Each step encodes all still-running cases block-diagonally and adds
    every case's argmax-Q node. Per case this follows exactly the greedy
    policy of greedy_rollout; batching only fuses the encodes. Returns the
    per-case sigma traces.
    """
    states = [simulate(graph, (), realization) for graph, realization in cases]
    seeds = [[] for _ in cases]
    sigmas = [[] for _ in cases]
    running = [i for i, s in enumerate(states) if not s.active.all()]
    while running:
        sub = [(cases[i][0], seeds[i]) for i in running]
        table, offsets = encode_batch(sub, params.encoder, depth)
        next_running = []
        for slot, i in enumerate(running):
            graph = cases[i][0]
            mask = np.ones(graph.node_count, dtype=bool)
            if seeds[i]:
                mask[np.asarray(seeds[i], dtype=np.int64)] = False
            candidates = np.flatnonzero(mask)
            q = q_values_at(table, params.decoder, offsets[slot + 1] - 1,
                            offsets[slot] + candidates)
            action = int(candidates[int(np.argmax(q))])
            states[i] = simulate_incremental(graph, states[i], action)
            seeds[i].append(action)
            sigmas[i].append(states[i].active_fraction)
            if not states[i].active.all():
                next_running.append(i)
        running = next_running
    return sigmas


def validation_return(params: QNetParams, cases, depth: int) -> float:
    sigma_traces = batched_greedy_rollouts(params, cases, depth)
    values = [sum(1.0 - s for s in trace) / graph.node_count
              for trace, (graph, _) in zip(sigma_traces, cases)]
    return float(np.mean(values))


@dataclass
class TrainResult:
    best_checkpoint: str
    final_checkpoint: str
    log_path: str
    initial_return: float
    best_return: float
    final_return: float
    iterations: int
    episodes: int
    log_rows: list = field(default_factory=list)


def train(config: TrainConfig) -> TrainResult:
    """Run the full training loop and persist checkpoints plus a CSV log.

    Deterministic for a fixed config: all randomness flows from
    config.rng_seed through per-purpose streams and updates are applied
    single-threaded.
    """
    config.validate()
    os.makedirs(config.checkpoint_dir, exist_ok=True)
    streams = np.random.SeedSequence(config.rng_seed).spawn(4)
    rng_params = np.random.Generator(np.random.PCG64(streams[_STREAM_PARAMS]))
    rng_episode = np.random.Generator(np.random.PCG64(streams[_STREAM_EPISODES]))
    rng_sample = np.random.Generator(np.random.PCG64(streams[_STREAM_SAMPLING]))

    params = QNetParams.initialize(config.embedding_dim,
                                   rng_params, config.init_scale)
    adam = AdamState.initialize(params, config.learning_rate)
    buffer = ReplayBuffer(config.replay_capacity)
    validation_cases = build_validation_set(config)

    episodes = 0

    def interact():
        nonlocal episodes
        trace = run_episode(params, config, rng_episode,
                            epsilon=config.epsilon_at(episodes))
        for experience in assemble_experiences(trace, config.n_step):
            buffer.push(experience)
        episodes += 1

    warmup_target = max(config.warmup_experiences, config.batch_size)
    while len(buffer) < warmup_target and episodes < config.episode_budget:
        interact()

    best_path = os.path.join(config.checkpoint_dir, "best.ckpt")
    final_path = os.path.join(config.checkpoint_dir, "final.ckpt")
    log_path = os.path.join(config.checkpoint_dir, "train_log.csv")

    def metadata(iteration, val):
        return {"iteration": iteration, "episode": episodes,
                "validation_return": val, "rng_seed": config.rng_seed}

    initial_return = validation_return(params, validation_cases, config.layers)
    best_return = initial_return
    save_checkpoint(best_path, params, config.layers, adam,
                    metadata(0, initial_return))
    log_rows = [{"iteration": 0, "episode": episodes, "loss": "",
                 "val_return": f"{initial_return:.10f}"}]
    log.info("iteration 0: validation return %.6f", initial_return)

    final_return = initial_return
    for iteration in range(1, config.max_iterations + 1):
        if iteration % config.interact_every == 0 and episodes < config.episode_budget:
            interact()
        row = {"iteration": iteration, "episode": episodes,
               "loss": "", "val_return": ""}
        batch = buffer.sample(config.batch_size, rng_sample)
        if batch is not None:
            loss, grads = loss_and_gradients(batch, params, config.gamma,
                                             config.alpha, config.layers)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: loss {loss} at iteration {iteration}")
            adam.apply(params, grads)
            params.steps_since_sync += 1
            if params.steps_since_sync >= config.sync_every:
                sync_target(params)
            row["loss"] = f"{loss:.10f}"
        if iteration % config.validate_every == 0 or iteration == config.max_iterations:
            val = validation_return(params, validation_cases, config.layers)
            final_return = val
            row["val_return"] = f"{val:.10f}"
            log.info("iteration %d (episode %d): loss %s validation return %.6f",
                     iteration, episodes, row["loss"] or "n/a", val)
            if val < best_return:
                best_return = val
                save_checkpoint(best_path, params, config.layers, adam,
                                metadata(iteration, val))
        log_rows.append(row)

    save_checkpoint(final_path, params, config.layers, adam,
                    metadata(config.max_iterations, final_return))
    with open(log_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(LOG_COLUMNS))
        writer.writeheader()
        writer.writerows(log_rows)
    return TrainResult(best_checkpoint=best_path, final_checkpoint=final_path,
                       log_path=log_path, initial_return=initial_return,
                       best_return=best_return, final_return=final_return,
                       iterations=config.max_iterations, episodes=episodes,
                       log_rows=log_rows)
