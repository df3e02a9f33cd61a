"""Shared fixtures: the benchmark configuration and its solved artifacts.

The session-scoped fixtures hold the expensive pieces (stationary solves at
the default grid, million-replication constant estimates) so the module tests
and the acceptance suite reuse one computation.
"""

from __future__ import annotations

import pytest

from gatedcusum import (
    ChangeModel,
    HarvestModel,
    estimate_constants,
    llr_stats,
    solve_stationary_density,
    transition_probs,
)

E_S = 0.5
DEFICIT_HBARS = (0.4, 0.3, 0.2)


@pytest.fixture(scope="session")
def model():
    return ChangeModel(m0=0.0, m1=0.5, sigma=1.0)


@pytest.fixture(scope="session")
def stats(model):
    return llr_stats(model)


@pytest.fixture(scope="session")
def densities():
    out = {}
    for hbar in DEFICIT_HBARS:
        harvest = HarvestModel(family="exponential", mean=hbar)
        out[hbar] = solve_stationary_density(harvest, E_S)
    return out


@pytest.fixture(scope="session")
def chains(densities):
    return {
        hbar: transition_probs(d, HarvestModel(family="exponential", mean=hbar), E_S)
        for hbar, d in densities.items()
    }


@pytest.fixture(scope="session")
def ungated_consts(model):
    return estimate_constants(model, seed=101)


@pytest.fixture(scope="session")
def gated_consts(model, chains):
    return {
        hbar: estimate_constants(model, chain=chains[hbar], seed=300 + i)
        for i, hbar in enumerate(DEFICIT_HBARS)
    }
