"""Dephasing kernels: frozen high-precision oracles, scaling laws, plateau,
and the wavenumber-vs-frequency route consistency.

The oracle values are 30-digit mpmath tanh-sinh integrations of the defining
k-integrals at unit coupling prefactor, frozen so the suite has no quadrature
dependency of its own.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from spinbath import (
    KernelTable,
    QuadratureError,
    build_kernel_table,
    clear_caches,
    delta_infinity,
    delta_kernel,
    gamma_kernel,
)
from spinbath.reservoir import delta_kernel_spectral_route

from conftest import make_params

# (epsilon_dd, t) -> (delta, gamma) at eta = 5, theta = 1, ell_ratio = 1, T = 0
KERNEL_ORACLES = {
    (-1.0, 1.0): (0.18138169237748304664, 0.42291111811318787652),
    (-1.0, 10.0): (0.95128718552739079163, 0.15044973113991268815),
    (0.0, 1.0): (0.15468141285145808327, 0.29866309104665522452),
    (0.0, 10.0): (0.75529036727108044842, 0.20219486793382491225),
}

# epsilon_dd -> t -> infinity limit of delta at unit coupling
PLATEAU_ORACLES = {-1.0: 0.98751451574445373284, 0.0: 0.8676870104059238799}


def unit_params(eps):
    return make_params(epsilon_dd=eps, theta=1.0)


@pytest.mark.parametrize("eps,t", sorted(KERNEL_ORACLES))
def test_kernels_against_mpmath(eps, t):
    p = unit_params(eps)
    d_want, g_want = KERNEL_ORACLES[(eps, t)]
    assert abs(delta_kernel(t, p) - d_want) < 2e-10
    assert abs(gamma_kernel(t, p) - g_want) < 2e-10


@pytest.mark.parametrize("eps", sorted(PLATEAU_ORACLES))
def test_plateau_against_mpmath(eps):
    assert abs(delta_infinity(unit_params(eps)) - PLATEAU_ORACLES[eps]) < 2e-10


def test_kernels_linear_in_theta():
    a = delta_kernel(3.0, make_params(theta=0.015))
    b = delta_kernel(3.0, unit_params(-1.0))
    assert a == 0.015 * b
    ag = gamma_kernel(3.0, make_params(theta=0.015))
    bg = gamma_kernel(3.0, unit_params(-1.0))
    assert ag == 0.015 * bg


def test_table_matches_pointwise_kernels(base_params, base_table):
    for t in (0.01, 1.0, 31.62, 1000.0):
        i = int(np.argmin(np.abs(base_table.times - t)))
        tt = float(base_table.times[i])
        assert base_table.delta[i] == pytest.approx(delta_kernel(tt, base_params), rel=1e-12)
        assert base_table.gamma[i] == pytest.approx(gamma_kernel(tt, base_params), rel=1e-12)


def test_table_reuses_unit_cache_across_theta(base_params, base_table):
    hot = build_kernel_table(unit_params(-1.0), base_table.times)
    assert np.array_equal(base_table.delta, base_params.theta * hot.delta)
    assert np.array_equal(base_table.gamma, base_params.theta * hot.gamma)
    assert base_table.delta_inf == base_params.theta * hot.delta_inf


def test_gamma_decreasing_at_late_times():
    p = unit_params(-1.0)
    t = np.geomspace(5.0, 50.0, 12)
    g = np.array([gamma_kernel(float(tt), p) for tt in t])
    assert np.all(np.diff(g) < 0.0)


def test_delta_reaches_plateau():
    p = unit_params(-1.0)
    d_late = delta_kernel(1000.0, p)
    assert abs(d_late / PLATEAU_ORACLES[-1.0] - 1.0) < 1e-3


def test_finite_temperature_boosts_gamma_only():
    cold = unit_params(-1.0)
    warm = make_params(theta=1.0, temperature=2.0)
    assert gamma_kernel(1.0, warm) > 2.0 * gamma_kernel(1.0, cold)
    assert delta_kernel(1.0, warm) == delta_kernel(1.0, cold)


def test_wavenumber_and_frequency_routes_agree():
    for eps in (-1.0, 0.0):
        p = unit_params(eps)
        for t in (1.0, 10.0):
            a = delta_kernel(t, p)
            b = delta_kernel_spectral_route(t, p)
            assert abs(a / b - 1.0) < 1e-6


def test_plateau_diverges_for_attractive_dipoles():
    with pytest.raises(QuadratureError) as exc:
        delta_infinity(unit_params(1.0))
    assert not math.isfinite(exc.value.achieved)


def test_table_survives_divergent_plateau():
    p = make_params(epsilon_dd=1.0)
    tbl = build_kernel_table(p, np.array([1.0, 10.0]))
    assert math.isnan(tbl.delta_inf)
    assert np.all(np.isfinite(tbl.delta)) and np.all(np.isfinite(tbl.gamma))
    # regression pin for the attractive branch (quadrature-level accuracy)
    assert tbl.delta[1] == pytest.approx(0.015 * 0.8180320821892993, rel=1e-9)


def test_kernel_rejects_nonpositive_time():
    p = unit_params(-1.0)
    with pytest.raises(ValueError):
        delta_kernel(0.0, p)
    with pytest.raises(ValueError):
        gamma_kernel(-1.0, p)


def test_interpolate_linear_and_bounded(base_table):
    t = 0.5 * (base_table.times[100] + base_table.times[101])
    d, g = base_table.interpolate(float(t))
    assert d == pytest.approx(0.5 * (base_table.delta[100] + base_table.delta[101]), rel=1e-14)
    assert g == pytest.approx(0.5 * (base_table.gamma[100] + base_table.gamma[101]), rel=1e-14)
    with pytest.raises(ValueError):
        base_table.interpolate(float(base_table.times[0]) * 0.5)
    with pytest.raises(ValueError):
        base_table.interpolate(float(base_table.times[-1]) * 1.01)


def test_merged_tables_sorted_unique():
    p = unit_params(-1.0)
    a = build_kernel_table(p, np.array([1.0, 5.0]), include_plateau=False)
    b = build_kernel_table(p, np.array([2.0, 5.0, 9.0]))
    m = a.merged_with(b)
    assert np.array_equal(m.times, [1.0, 2.0, 5.0, 9.0])
    assert m.delta[0] == a.delta[0] and m.delta[1] == b.delta[0]
    # the finite plateau wins over the skipped one
    assert math.isnan(a.delta_inf)
    assert m.delta_inf == b.delta_inf


def test_table_identical_when_built_concurrently(base_params):
    clear_caches()
    times = np.geomspace(0.1, 20.0, 16)

    def build(_):
        return build_kernel_table(base_params, times, include_plateau=False)

    with ThreadPoolExecutor(max_workers=8) as pool:
        tables = list(pool.map(build, range(8)))
    ref = tables[0]
    for tbl in tables[1:]:
        assert tbl.delta.tobytes() == ref.delta.tobytes()
        assert tbl.gamma.tobytes() == ref.gamma.tobytes()
