"""Shared fixtures: the small array specs used across the test modules."""

import math

import numpy as np
import pytest

from funclt import (
    ArraySpec,
    CoefficientLaw,
    GridFunction,
    fourier_basis,
    get_scenario,
    uniform_grid,
)


def unit_row_scaling(n: int, m: int) -> float:
    return 1.0


def indicator_basis(grid):
    """Orthonormal indicator (histogram) basis spanning the full grid space."""
    out = []
    for i in range(grid.size):
        values = np.zeros(grid.size)
        values[i] = 1.0 / math.sqrt(grid.weights[i])
        out.append(GridFunction(grid, values))
    return tuple(out)


@pytest.fixture(scope="session")
def grid16():
    return uniform_grid(16)


@pytest.fixture(scope="session")
def j2_scenario():
    return get_scenario("gaussian-j2")


@pytest.fixture(scope="session")
def j2_spec(j2_scenario):
    return j2_scenario.make_spec(grid_size=16)


@pytest.fixture(scope="session")
def j2_sigma(j2_scenario, j2_spec):
    return j2_scenario.sigma_limit(j2_spec)


@pytest.fixture(scope="session")
def full_rank_spec(grid16):
    """J = G Gaussian spec: every pattern leaves genuine conditional freedom."""
    return ArraySpec(
        grid=grid16,
        basis=indicator_basis(grid16),
        coeff_laws=lambda m, j: CoefficientLaw.gaussian(1.0),
        row_scaling=unit_row_scaling,
        name="indicator16",
    )


@pytest.fixture(scope="session")
def j12_spec(grid16):
    """Correlated 12-dimensional Gaussian expansion with decaying scales."""
    return ArraySpec(
        grid=grid16,
        basis=tuple(fourier_basis(grid16, 12)),
        coeff_laws=lambda m, j: CoefficientLaw.gaussian(0.9 ** (j / 2.0)),
        row_scaling=unit_row_scaling,
        name="fourier12",
    )
