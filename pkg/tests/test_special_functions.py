"""Special-function layer: scaled exponential integral and the dipolar form factor.

Reference values are 40-digit mpmath evaluations (mp.e1), frozen here so the
test suite needs nothing beyond numpy.
"""

import numpy as np
import pytest

from spinbath import backend, dipole_form_factor, incomplete_gamma0

# x -> e^x E1(x), spanning both evaluation regimes and the switch at x = 1
EXP_SCALED_E1 = {
    0.01: 4.0785114434564258466,
    0.5: 0.92291063248373046883,
    0.999: 0.59675131336868582445,
    1.0: 0.59634736232319407434,
    1.001: 0.59594400762544767665,
    2.0: 0.3613286168882225847,
    10.0: 0.091563333939788081876,
    50.0: 0.019615109930114870365,
}

E1_PLAIN = {
    0.01: 4.0379295765381138318,
    0.5: 0.55977359477616081175,
    1.0: 0.21938393439552027368,
}

# k -> nu(k) = 1 - 3 x e^x E1(x), x = k^2/2
NU_TILDE = {
    0.3: 0.63730998006469827846,
    1.0: -0.38436594872559570325,
    2.0: -1.1679717013293355082,
    3.0: -1.5196614376725773456,
    50.0: -1.9976038308133737983,
    100.0: -1.9994002398561150849,
}

NU_PRIME = {
    0.5: -1.60429505243864099,
    1.0: -1.1530978461767871097,
}


def test_exp_scaled_e1_against_mpmath():
    x = np.array(sorted(EXP_SCALED_E1))
    want = np.array([EXP_SCALED_E1[v] for v in sorted(EXP_SCALED_E1)])
    got = backend.exp_scaled_e1(x)
    # the continued fraction loses ~10 ulp right above the x = 1 switch
    assert np.all(np.abs(got - want) <= 1.5e-14 * want)


def test_gamma0_matches_e1():
    for x, want in E1_PLAIN.items():
        assert incomplete_gamma0(x) == pytest.approx(want, rel=4e-16)
    # consistency with the scaled variant
    x = np.geomspace(0.02, 40.0, 23)
    a = backend.gamma0(x)
    b = backend.exp_scaled_e1(x) * np.exp(-x)
    assert np.allclose(a, b, rtol=5e-15, atol=0.0)


def test_exp_scaled_e1_continuous_at_regime_switch():
    lo = backend.exp_scaled_e1(1.0 - 1e-13)
    hi = backend.exp_scaled_e1(1.0 + 1e-13)
    assert abs(lo - hi) < 5e-13


def test_exp_scaled_e1_asymptotics():
    # e^x E1(x) ~ (1 - 1/x + 2/x^2 - 6/x^3) / x, truncation error ~ 24/x^4
    for x in (200.0, 1e4, 1e8):
        want = (1.0 - 1.0 / x + 2.0 / (x * x) - 6.0 / x**3) / x
        assert backend.exp_scaled_e1(x) == pytest.approx(want, rel=100.0 / x**4 + 1e-14)
    # E1(x) ~ -log(x) - euler_gamma for small x
    assert backend.gamma0(1e-12) == pytest.approx(
        -np.log(1e-12) - np.euler_gamma, rel=1e-13)


def test_incomplete_gamma0_rejects_nonpositive():
    with pytest.raises(ValueError):
        incomplete_gamma0(0.0)
    with pytest.raises(ValueError):
        incomplete_gamma0(np.array([1.0, -2.0]))


def test_nu_tilde_against_mpmath():
    for k, want in NU_TILDE.items():
        assert backend.nu_tilde(k) == pytest.approx(want, rel=2e-14)


def test_nu_tilde_limits():
    assert dipole_form_factor(0.0) == 1.0
    assert dipole_form_factor(1e-8) == pytest.approx(1.0, abs=1e-14)
    # large-k expansion: nu = -2 + 6/k^2 - 24/k^4 + O(k^-6)
    for k in (40.0, 100.0, 300.0):
        want = -2.0 + 6.0 / k**2 - 24.0 / k**4
        assert backend.nu_tilde(k) == pytest.approx(want, abs=2e3 / k**6)


def test_dipole_form_factor_wraps_backend():
    k = np.geomspace(0.05, 30.0, 17)
    assert np.array_equal(dipole_form_factor(k), backend.nu_tilde(k))
    assert isinstance(dipole_form_factor(1.3), float)


def test_nu_tilde_monotone_decreasing():
    k = np.linspace(0.0, 12.0, 500)
    v = backend.nu_tilde(k)
    assert np.all(np.diff(v) < 0.0)
    assert np.all(v <= 1.0) and np.all(v > -2.0)


def test_nu_tilde_prime_against_mpmath():
    for k, want in NU_PRIME.items():
        assert backend.nu_tilde_prime(k) == pytest.approx(want, rel=2e-15)
    assert backend.nu_tilde_prime(0.0) == 0.0


def test_nu_tilde_prime_is_derivative(rng):
    k = rng.uniform(0.1, 8.0, size=40)
    h = 1e-4
    # fourth-order central difference
    fd = (backend.nu_tilde(k - 2 * h) - 8 * backend.nu_tilde(k - h)
          + 8 * backend.nu_tilde(k + h) - backend.nu_tilde(k + 2 * h)) / (12 * h)
    assert np.allclose(backend.nu_tilde_prime(k), fd, rtol=1e-8, atol=1e-10)


def test_vectorized_shapes_match_scalars():
    k = np.array([0.3, 1.0, 2.0])
    vec = backend.nu_tilde(k)
    assert vec.shape == (3,)
    for i, kk in enumerate(k):
        assert vec[i] == backend.nu_tilde(float(kk))
