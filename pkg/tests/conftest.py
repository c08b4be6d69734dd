import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ltimax.graphs import GeneratorConfig, Graph, generate


@pytest.fixture
def path2():
    """Single undirected edge 0-1."""
    return Graph.from_edges(2, [(0, 1)], directed=False)


@pytest.fixture
def cycle4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)], directed=False)


@pytest.fixture
def star4():
    """Center 0 with leaves 1..3, undirected."""
    return Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)], directed=False)


def random_graph(rng, n_min=5, n_max=30, model="erdos-renyi", **kwargs):
    n = int(rng.integers(n_min, n_max + 1))
    if model == "erdos-renyi":
        p = kwargs.get("p", float(rng.uniform(0.1, 0.4)))
        config = GeneratorConfig(model=model, n=n, p=p,
                                 rng_seed=int(rng.integers(2 ** 62)))
    else:
        m = kwargs.get("m", min(3, n - 1))
        config = GeneratorConfig(model=model, n=n, m=m,
                                 p=kwargs.get("p", 0.05),
                                 rng_seed=int(rng.integers(2 ** 62)))
    return generate(config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
