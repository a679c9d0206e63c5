from pathlib import Path

import numpy as np
import pytest

from experiments.loader import load_problem
from structures.population import Problem, Rollout, build_problem

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long convergence checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running convergence check, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.json"


def random_cover_sets(rng: np.random.Generator, states, max_sets: int = 4):
    """Random overlapping subsets plus singletons for whatever stays uncovered"""
    sets = {}
    for k in range(int(rng.integers(1, max_sets + 1))):
        size = int(rng.integers(1, len(states) + 1))
        sets[f"O{k}"] = [states[i] for i in rng.choice(len(states), size=size, replace=False)]
    covered = {s for members in sets.values() for s in members}
    for s in states:
        if s not in covered:
            sets[f"S_{s}"] = [s]
    return sets


def build_random_problem(rng: np.random.Generator, max_states: int = 10) -> Problem:
    n = int(rng.integers(2, max_states + 1))
    states = [f"s{i}" for i in range(n)]
    order = [states[i] for i in rng.permutation(n)]
    b = int(rng.integers(1, min(n, 4) + 1))
    cuts = sorted(rng.choice(np.arange(1, n), size=b - 1, replace=False)) if b > 1 else []
    chunks = np.split(np.array(order, dtype=object), cuts)
    actions = ["alpha", "beta"]
    rollouts = [
        Rollout(actions[int(rng.integers(0, 2))], tuple(chunk), f"f{i}")
        for i, chunk in enumerate(chunks)
    ]
    return build_problem(
        states=states,
        cover_sets=random_cover_sets(rng, states),
        actions=actions,
        terminals=[f"f{i}" for i in range(b)],
        rollouts=rollouts,
        name="random",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_problem():
    return build_random_problem


@pytest.fixture
def random_cover():
    return random_cover_sets


@pytest.fixture(scope="session")
def fig2():
    return load_problem(fixture_path("fig2"))


@pytest.fixture(scope="session")
def t1():
    return load_problem(fixture_path("t1"))


@pytest.fixture(scope="session")
def p_hom():
    return load_problem(fixture_path("p_hom"))


@pytest.fixture(scope="session")
def h2b():
    return load_problem(fixture_path("h2b"))


@pytest.fixture(scope="session")
def h3():
    return load_problem(fixture_path("h3"))


@pytest.fixture(scope="session")
def h4():
    return load_problem(fixture_path("h4"))


@pytest.fixture(scope="session")
def n1():
    return load_problem(fixture_path("n1"))


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
