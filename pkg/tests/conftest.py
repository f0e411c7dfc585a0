from pathlib import Path

import numpy as np
import pytest

from netcomp.degree import build_distribution, from_table

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def two_bump():
    return build_distribution(DATA / "directed_two_bump.toml")


@pytest.fixture(scope="session")
def oscillating():
    return build_distribution(DATA / "two_layer_oscillating.toml")


@pytest.fixture(scope="session")
def degenerate():
    return build_distribution(DATA / "directed_degenerate.toml")


@pytest.fixture(scope="session")
def poisson_half():
    return build_distribution(DATA / "directed_poisson.toml")


@pytest.fixture
def matching():
    return from_table([[0.0, 0.5], [0.5, 0.0]], "directed")


def random_balanced(rng, K=4, density=0.6):
    """Random directed table with equal mean in- and out-degree and u(0,0) > 0."""
    m = rng.random((K + 1, K + 1)) * (rng.random((K + 1, K + 1)) < density)
    m[0, 0] += 0.2
    m[1, 0] += 0.05
    m[0, 1] += 0.05
    m /= m.sum()
    k = np.arange(K + 1)
    gap = (m.sum(0) @ k) - (m.sum(1) @ k)      # out minus in
    cell = (1, 0) if gap > 0 else (0, 1)
    m[cell] += abs(gap)
    return from_table(m, "directed")


@pytest.fixture(scope="session")
def two_bump_curve(two_bump):
    from netcomp.directed import weak_components
    return weak_components(two_bump, 2000)


@pytest.fixture(scope="session")
def oscillating_curve(oscillating):
    from netcomp.multiplex import two_layer_components
    return two_layer_components(oscillating, 2000)
