import csv
import math

import numpy as np
import pytest

import ltimax.trainer as trainer_mod
from ltimax.diffusion import ThresholdRealization, sample_realization
from ltimax.errors import ConfigError
from ltimax.graphs import GeneratorConfig, Graph, generate
from ltimax.qnet import QNetParams
from ltimax.trainer import (TrainConfig, assemble_experiences,
                            batched_greedy_rollouts, build_validation_set,
                            compute_return, greedy_rollout, run_episode,
                            train, validation_return)


def small_config(tmp_path, **overrides):
    base = dict(rng_seed=3, max_iterations=40, scale_min=10, scale_max=14,
                embedding_dim=8, warmup_experiences=30, batch_size=8,
                validation_graphs=4, validate_every=20, interact_every=5,
                checkpoint_dir=str(tmp_path / "ckpt"))
    base.update(overrides)
    return TrainConfig(**base)


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        TrainConfig(n_step=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(scale_min=50, scale_max=30).validate()
    with pytest.raises(ConfigError):
        TrainConfig(epsilon_start=0.2, epsilon_final=0.5).validate()
    with pytest.raises(ConfigError):
        TrainConfig(embedding_dim=7).validate()


def test_epsilon_schedule():
    config = TrainConfig(max_iterations=10_000, interact_every=10,
                         epsilon_start=1.0, epsilon_final=0.05)
    assert config.decay_episodes() == 100
    assert config.epsilon_at(0) == 1.0
    assert config.epsilon_at(50) == pytest.approx(0.525)
    assert config.epsilon_at(100) == pytest.approx(0.05)
    assert config.epsilon_at(5000) == pytest.approx(0.05)
    fixed = TrainConfig(epsilon_decay_episodes=7)
    assert fixed.decay_episodes() == 7


def test_episode_contracts(rng):
    params = QNetParams.initialize(8, 0, 0.05)
    config = TrainConfig(scale_min=10, scale_max=20, embedding_dim=8)
    for epsilon in (1.0, 0.3, 0.0):
        trace = run_episode(params, config, np.random.default_rng(5),
                            epsilon=epsilon)
        assert trace.k_star >= 1
        assert trace.k_star <= trace.graph.node_count
        assert len(set(trace.actions)) == len(trace.actions)
        assert trace.rewards[-1] == 0.0
        assert all(b >= a for a, b in zip(trace.rewards, trace.rewards[1:]))
        assert all(-1.0 <= r <= 0.0 for r in trace.rewards)


def test_episode_exploration_uniform():
    """epsilon = 1 picks first actions uniformly over all nodes."""
    params = QNetParams.initialize(8, 0, 0.05)
    config = TrainConfig(embedding_dim=8)
    graph = generate(GeneratorConfig(model="powerlaw-cluster", n=12, m=2,
                                     p=0.05, rng_seed=3))
    theta = ThresholdRealization(theta=np.full(12, 0.999999))
    rng = np.random.default_rng(99)
    counts = np.zeros(12)
    draws = 3000
    for _ in range(draws):
        trace = run_episode(params, config, rng, epsilon=1.0, graph=graph,
                            realization=theta)
        counts[trace.actions[0]] += 1
    expected = draws / 12
    sigma = math.sqrt(draws * (1 / 12) * (11 / 12))
    assert np.all(np.abs(counts - expected) <= 5 * sigma)


def test_assemble_single_step_episode(rng):
    graph = Graph.from_edges(2, [(0, 1)], directed=False)
    trace = trainer_mod.EpisodeTrace(
        graph=graph, realization=sample_realization(graph, 0),
        actions=(1,), rewards=(0.0,), sigmas=(1.0,))
    exps = assemble_experiences(trace, n_step=5)
    assert len(exps) == 1
    assert exps[0].terminal
    assert exps[0].reward_sum == 0.0
    assert exps[0].seeds_before == ()
    assert exps[0].seeds_after == (1,)


def test_assemble_horizons():
    graph = Graph.from_edges(8, [(i, i + 1) for i in range(7)], directed=False)
    rewards = (-0.9, -0.8, -0.6, -0.5, -0.3, -0.2, 0.0)
    trace = trainer_mod.EpisodeTrace(
        graph=graph, realization=sample_realization(graph, 0),
        actions=tuple(range(7)), rewards=rewards,
        sigmas=tuple(1.0 + r for r in rewards))
    exps = assemble_experiences(trace, n_step=5)
    assert [e.terminal for e in exps] == [False, False, True, True, True,
                                          True, True]
    assert exps[0].reward_sum == pytest.approx(sum(rewards[0:5]))
    assert exps[0].seeds_after == (0, 1, 2, 3, 4)
    assert exps[6].reward_sum == pytest.approx(rewards[6])
    # full-horizon slice telescopes to the whole episode
    whole = assemble_experiences(trace, n_step=50)[0]
    assert whole.reward_sum == pytest.approx(sum(rewards))


def test_return_zero_when_first_seed_fills():
    graph = Graph.from_edges(2, [(0, 1)], directed=False)
    params = QNetParams.initialize(8, 1, 0.05)
    realization = ThresholdRealization(theta=np.array([0.5, 0.5]))
    assert compute_return(params, graph, realization, depth=2) == 0.0


def test_return_edgeless_closed_form():
    n = 7
    graph = Graph.from_edges(n, [], directed=False)
    params = QNetParams.initialize(8, 1, 0.05)
    realization = sample_realization(graph, 4)
    expected = (n - 1) / (2 * n)
    assert compute_return(params, graph, realization, depth=2) == pytest.approx(
        expected, abs=1e-12)


def test_return_reward_identity(rng):
    params = QNetParams.initialize(8, 2, 0.05)
    for _ in range(10):
        graph = generate(GeneratorConfig(
            model="powerlaw-cluster", n=int(rng.integers(10, 30)), m=3,
            p=0.1, rng_seed=int(rng.integers(2 ** 62))))
        realization = sample_realization(graph, int(rng.integers(2 ** 62)))
        trace = greedy_rollout(params, graph, realization, depth=3)
        ret = compute_return(params, graph, realization, depth=3)
        assert abs(ret - (-sum(trace.rewards) / graph.node_count)) <= 1e-12


def test_batched_rollouts_match_sequential(rng):
    params = QNetParams.initialize(8, 5, 0.05)
    cases = []
    for _ in range(6):
        graph = generate(GeneratorConfig(
            model="powerlaw-cluster", n=int(rng.integers(10, 20)), m=3,
            p=0.05, rng_seed=int(rng.integers(2 ** 62))))
        cases.append((graph, sample_realization(graph, int(rng.integers(2 ** 62)))))
    sigma_traces = batched_greedy_rollouts(params, cases, depth=3)
    for (graph, realization), trace in zip(cases, sigma_traces):
        solo = greedy_rollout(params, graph, realization, depth=3)
        assert tuple(trace) == solo.sigmas
    mean = validation_return(params, cases, depth=3)
    singles = [compute_return(params, g, r, depth=3) for g, r in cases]
    assert mean == pytest.approx(np.mean(singles), abs=1e-12)


def test_validation_set_frozen(tmp_path):
    config = small_config(tmp_path)
    a = build_validation_set(config)
    b = build_validation_set(config)
    assert len(a) == config.validation_graphs
    for (g1, r1), (g2, r2) in zip(a, b):
        assert np.array_equal(g1.out_indices, g2.out_indices)
        assert np.array_equal(r1.theta, r2.theta)


def test_train_smoke_and_log_columns(tmp_path):
    result = train(small_config(tmp_path))
    assert result.episodes > 0
    with open(result.log_path, newline="") as handle:
        reader = csv.DictReader(handle)
        assert reader.fieldnames == ["iteration", "episode", "loss",
                                     "val_return"]
        rows = list(reader)
    assert rows[0]["iteration"] == "0"
    assert rows[0]["val_return"] != ""
    assert any(r["loss"] != "" for r in rows[1:])


def test_train_zero_learning_rate_flat_validation(tmp_path):
    result = train(small_config(tmp_path, learning_rate=0.0,
                                max_iterations=40, validate_every=10))
    vals = {row["val_return"] for row in result.log_rows
            if row["val_return"] != ""}
    assert len(vals) == 1


def test_train_deterministic_checkpoints(tmp_path):
    r1 = train(small_config(tmp_path / "a"))
    r2 = train(small_config(tmp_path / "b"))
    with open(r1.final_checkpoint, "rb") as f:
        bytes1 = f.read()
    with open(r2.final_checkpoint, "rb") as f:
        bytes2 = f.read()
    assert bytes1 == bytes2
    with open(r1.best_checkpoint, "rb") as f:
        best1 = f.read()
    with open(r2.best_checkpoint, "rb") as f:
        best2 = f.read()
    assert best1 == best2


def test_train_smoke_return_decreases(tmp_path):
    """2000-iteration run on 30-50 node graphs improves on iteration 0."""
    result = train(TrainConfig(rng_seed=11, max_iterations=2000,
                               validation_graphs=30,
                               checkpoint_dir=str(tmp_path / "smoke")))
    assert result.best_return < result.initial_return


def test_train_divergence_guard(tmp_path, monkeypatch):
    def nan_loss(*args, **kwargs):
        raise FloatingPointError("loss is non-finite")
    monkeypatch.setattr(trainer_mod, "loss_and_gradients", nan_loss)
    with pytest.raises(FloatingPointError):
        train(small_config(tmp_path))
