import numpy as np
import pytest

from ltimax.diffusion import (CascadeState, ThresholdRealization,
                              estimate_spread, exact_spread,
                              sample_realization, simulate,
                              simulate_incremental)
from ltimax.errors import ContractError, EnumerationError
from ltimax.graphs import Graph

from conftest import random_graph
from oracles import reference_simulate, shuffled_simulate


def make_realization(theta):
    return ThresholdRealization(theta=np.asarray(theta, dtype=np.float64))


def active_set(state):
    return set(np.flatnonzero(state.active).tolist())


def test_weight_one_edge_always_fires(path2):
    for theta_v in (0.01, 0.5, 0.999):
        state = simulate(path2, {0}, make_realization([0.5, theta_v]))
        assert active_set(state) == {0, 1}


def test_cycle_high_thresholds_blocks(cycle4):
    state = simulate(cycle4, {1}, make_realization([0.6] * 4))
    assert active_set(state) == {1}


def test_cycle_opposite_seeds_fill(cycle4):
    state = simulate(cycle4, {0, 2}, make_realization([0.5] * 4))
    assert active_set(state) == {0, 1, 2, 3}


def test_realization_bounds():
    with pytest.raises(ContractError):
        make_realization([0.0, 0.5])
    with pytest.raises(ContractError):
        make_realization([1.0, 0.5])
    g = Graph.from_edges(5, [(0, 1)], directed=False)
    r = sample_realization(g, 123)
    assert r.theta.shape == (5,)
    assert 0.0 < r.theta.min() and r.theta.max() < 1.0


def test_simulate_pure_function(rng):
    g = random_graph(rng)
    r = sample_realization(g, 5)
    s1 = simulate(g, {0, 1}, r)
    s2 = simulate(g, {0, 1}, r)
    assert np.array_equal(s1.active, s2.active)
    assert np.array_equal(s1.accumulated, s2.accumulated)


def test_incremental_noop_when_all_active(path2):
    r = make_realization([0.5, 0.5])
    state = simulate(path2, {0}, r)
    assert state.active.all()
    extended = simulate_incremental(path2, state, 1)
    assert np.array_equal(extended.active, state.active)
    assert extended.seeds == (0, 1)


def test_incremental_from_empty_equals_simulate(rng):
    g = random_graph(rng)
    r = sample_realization(g, 9)
    empty = simulate(g, (), r)
    assert empty.active_count == 0
    one = simulate_incremental(g, empty, 3)
    direct = simulate(g, {3}, r)
    assert np.array_equal(one.active, direct.active)


def test_incremental_any_order_matches_one_shot(rng):
    for _ in range(25):
        g = random_graph(rng, n_min=20, n_max=30)
        r = sample_realization(g, int(rng.integers(2 ** 62)))
        seeds = rng.choice(g.node_count, size=3, replace=False).tolist()
        one_shot = simulate(g, seeds, r)
        for order in ([0, 1, 2], [2, 0, 1], [1, 2, 0]):
            state = simulate(g, (), r)
            for i in order:
                state = simulate_incremental(g, state, seeds[i])
            assert np.array_equal(state.active, one_shot.active)


def test_monotone_and_order_independent(rng):
    for _ in range(60):
        g = random_graph(rng, n_min=5, n_max=25)
        r = sample_realization(g, int(rng.integers(2 ** 62)))
        size_t = int(rng.integers(1, max(2, g.node_count // 2)))
        t_seeds = rng.choice(g.node_count, size=size_t, replace=False).tolist()
        s_seeds = t_seeds[:max(0, size_t - 1)]
        small = active_set(simulate(g, s_seeds, r)) if s_seeds else set()
        large = active_set(simulate(g, t_seeds, r))
        assert small <= large
        assert large == reference_simulate(g, t_seeds, r.theta)
        order_rng = np.random.default_rng(int(rng.integers(2 ** 62)))
        assert large == shuffled_simulate(g, t_seeds, r.theta, order_rng)


def test_estimate_full_seed_set(rng):
    g = random_graph(rng)
    est = estimate_spread(g, range(g.node_count), 500, 1)
    assert est.mean == 1.0
    assert est.std_error == 0.0


def test_estimate_empty_seed_set(rng):
    g = random_graph(rng)
    est = estimate_spread(g, (), 500, 1)
    assert est.mean == 0.0


def test_estimate_weight_one_edge(path2):
    est = estimate_spread(path2, {0}, 300, 7)
    assert est.mean == 1.0


def test_estimate_deterministic_and_worker_invariant(rng):
    g = random_graph(rng, n_min=15, n_max=25)
    a = estimate_spread(g, {0, 1}, 3000, 42)
    b = estimate_spread(g, {0, 1}, 3000, 42)
    c = estimate_spread(g, {0, 1}, 3000, 42, workers=3)
    assert a == b == c


def test_estimate_rejects_bad_simulations(path2):
    with pytest.raises(ContractError):
        estimate_spread(path2, {0}, 0, 1)


def test_exact_full_set(rng):
    g = random_graph(rng, n_min=4, n_max=8)
    assert exact_spread(g, range(g.node_count)) == pytest.approx(1.0)


def test_exact_directed_edge():
    g = Graph.from_edges(2, [(0, 1)], directed=True)
    assert exact_spread(g, {0}) == pytest.approx(1.0)


def test_exact_directed_edge_plus_isolated():
    g = Graph.from_edges(3, [(0, 1)], directed=True)
    assert exact_spread(g, {0}) == pytest.approx(2.0 / 3.0)


def test_exact_refuses_large():
    g = Graph.from_edges(17, [(i, i + 1) for i in range(16)], directed=False)
    with pytest.raises(EnumerationError):
        exact_spread(g, {0})


def test_exact_agrees_with_monte_carlo(rng):
    checked = 0
    while checked < 8:
        g = random_graph(rng, n_min=4, n_max=8, p=0.35)
        seeds = rng.choice(g.node_count, size=2, replace=False).tolist()
        try:
            exact = exact_spread(g, seeds)
        except EnumerationError:
            continue
        est = estimate_spread(g, seeds, 40_000, int(rng.integers(2 ** 62)))
        assert abs(est.mean - exact) <= max(3.0 * est.std_error, 0.01)
        checked += 1


def test_empirical_submodularity(rng):
    """Marginal gains shrink as the seed set grows, up to noise."""
    holds = 0
    trials = 200
    for _ in range(trials):
        g = random_graph(rng, n_min=8, n_max=16)
        ids = rng.permutation(g.node_count)
        small = ids[:2].tolist()
        large = ids[:4].tolist()
        v = int(ids[4])
        seed = int(rng.integers(2 ** 62))
        sims = 3000
        base_small = estimate_spread(g, small, sims, seed)
        with_small = estimate_spread(g, small + [v], sims, seed + 1)
        base_large = estimate_spread(g, large, sims, seed + 2)
        with_large = estimate_spread(g, large + [v], sims, seed + 3)
        gain_small = with_small.mean - base_small.mean
        gain_large = with_large.mean - base_large.mean
        noise = 3.0 * (base_small.std_error + with_small.std_error
                       + base_large.std_error + with_large.std_error)
        if gain_small >= gain_large - noise:
            holds += 1
    assert holds >= 0.99 * trials


def test_state_invariants(rng):
    g = random_graph(rng)
    r = sample_realization(g, 3)
    state = simulate(g, {0}, r)
    assert isinstance(state, CascadeState)
    assert state.frontier == ()
    assert state.accumulated.max() <= 1.0 + 1e-12
    non_seed_active = np.flatnonzero(state.active).tolist()
    for v in non_seed_active:
        if v == 0:
            continue
        assert state.accumulated[v] >= r.theta[v] - 1e-12
