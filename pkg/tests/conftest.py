"""Shared fixtures: the canonical reservoir settings and one kernel table.

The table is session-scoped because it costs a few seconds to build; tests
that need different parameters build their own throwaway tables.
"""

import numpy as np
import pytest

from spinbath import ReservoirParams, build_kernel_table


def make_params(epsilon_dd=-1.0, eta=5.0, theta=0.015, ell_ratio=1.0,
                temperature=0.0):
    return ReservoirParams(eta=eta, epsilon_dd=epsilon_dd, theta=theta,
                           ell_ratio=ell_ratio, temperature=temperature)


@pytest.fixture(scope="session")
def base_params():
    """eta = 5, epsilon_dd = -1, theta = 0.015: the reference working point."""
    return make_params()


@pytest.fixture(scope="session")
def base_table(base_params):
    times = np.geomspace(0.01, 1000.0, 400)
    return build_kernel_table(base_params, times)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260814)
