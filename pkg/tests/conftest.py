import numpy as np
import pytest

from typedbandits.core import ParameterSet


@pytest.fixture(scope="session")
def fig2_params() -> ParameterSet:
    return ParameterSet([[0.6, 0.5, 0.5, 0.5], [0.5, 0.6, 0.5, 0.5]])


@pytest.fixture(scope="session")
def fig1_params() -> ParameterSet:
    k = 21
    rows = [[0.5] * k]
    rows[0][0] = 0.55
    for x in range(1, 21):
        row = [0.5] * k
        row[0] = 0.55
        row[x] = 0.6
        rows.append(row)
    return ParameterSet(rows)


def random_unique_instance(rng: np.random.Generator, max_types: int = 6,
                           max_arms: int = 6, grid: float = 0.05,
                           allow_duplicate_rows: bool = True) -> ParameterSet:
    """Random small instance on a value grid with unique row maxima."""
    n = int(rng.integers(1, max_types + 1))
    k = int(rng.integers(1, max_arms + 1))
    levels = int(round(1.0 / grid))
    while True:
        means = rng.integers(0, levels + 1, size=(n, k)) * grid
        ps = ParameterSet(means)
        if not ps.unique_optima:
            continue
        if not allow_duplicate_rows and np.unique(ps.means, axis=0).shape[0] < n:
            continue
        return ps
