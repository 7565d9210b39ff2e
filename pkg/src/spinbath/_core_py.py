"""Vectorized numpy implementations of the hot numerical kernels.

This module mirrors the compiled extension ``spinbath._core`` function by
function; ``spinbath.backend`` picks one of the two at import time.  Every
function takes float64 arrays (or scalars) and is safe to call on the node
batches produced by the adaptive quadrature driver.

Conventions: wavenumbers k are in units of the inverse reservoir oscillator
length, energies in units of the transverse trap quantum, temperatures in the
same energy unit.  The coupling prefactor is NOT applied here; integrands are
evaluated at unit coupling and scaled by the caller.
"""

import numpy as np

EULER_GAMMA = 0.5772156649015328606065

# series/continued-fraction crossover for the exponential integral
_E1_SPLIT = 1.0
_SERIES_TERMS = 28
_CF_ITERS = 100  # worst case is x = 1; the product form drifts past ~120
_TINY = 1e-300


def _e1_series(x):
    """E1(x) for 0 < x < 1 by the alternating power series."""
    x = np.asarray(x, dtype=np.float64)
    total = -EULER_GAMMA - np.log(x)
    p = np.ones_like(x)
    sign = 1.0
    for n in range(1, _SERIES_TERMS + 1):
        p = p * x / n
        total = total + sign * p / n
        sign = -sign
    return total


def _e1_cf_scaled(x):
    """e^x E1(x) for x >= 1 via the even continued fraction (modified Lentz).

    e^x E1(x) = 1 / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...)))
    """
    x = np.asarray(x, dtype=np.float64)
    f = x + 1.0
    c = x + 1.0
    d = np.zeros_like(x)
    for n in range(1, _CF_ITERS + 1):
        a = -float(n * n)
        b = x + 2.0 * n + 1.0
        d = 1.0 / (b + a * d)
        c = b + a / c
        f = f * (c * d)
    return 1.0 / f


def exp_scaled_e1(x):
    """e^x E1(x), valid for all x > 0 without overflow."""
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    lo = x < _E1_SPLIT
    if lo.any():
        out[lo] = np.exp(x[lo]) * _e1_series(x[lo])
    if (~lo).any():
        out[~lo] = _e1_cf_scaled(x[~lo])
    return out[0] if scalar else out


def gamma0(x):
    """Incomplete gamma function Gamma(0, x) = E1(x) for x > 0."""
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    lo = x < _E1_SPLIT
    if lo.any():
        out[lo] = _e1_series(x[lo])
    if (~lo).any():
        out[~lo] = np.exp(-x[~lo]) * _e1_cf_scaled(x[~lo])
    return out[0] if scalar else out


def nu_tilde(k):
    """Momentum-space form factor of the quasi-1D dipolar interaction.

    nu(k) = 1 - 3 x e^x E1(x) with x = k^2/2; nu(0) = 1, nu(inf) = -2.
    """
    k = np.asarray(k, dtype=np.float64)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    x = 0.5 * k * k
    out = np.ones_like(x)
    nz = x > 0.0
    if nz.any():
        out[nz] = 1.0 - 3.0 * x[nz] * exp_scaled_e1(x[nz])
    return out[0] if scalar else out


def nu_tilde_prime(k):
    """d nu/dk = 3 k (1 - (1 + x) e^x E1(x)), x = k^2/2."""
    k = np.asarray(k, dtype=np.float64)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    x = 0.5 * k * k
    out = np.zeros_like(x)
    nz = x > 0.0
    if nz.any():
        out[nz] = 3.0 * k[nz] * (1.0 - (1.0 + x[nz]) * exp_scaled_e1(x[nz]))
    return out[0] if scalar else out


def _interaction_factor(k, epsilon_dd):
    """(1 - epsilon_dd nu(k)) without the small-k cancellation.

    nu = 1 - 3x e^x E1(x) with x = k^2/2, so the factor equals
    (1 - epsilon_dd) + 3 epsilon_dd x e^x E1(x).  At epsilon_dd = +1 the
    leading term vanishes and the naive difference 1 - eps*nu dies to
    roundoff below k ~ 1e-8, which is exactly where the long-time kernel
    integrands live.
    """
    x = 0.5 * k * k
    out = np.full_like(x, 1.0 - epsilon_dd)
    nz = x > 0.0
    if nz.any():
        out[nz] += 3.0 * epsilon_dd * x[nz] * exp_scaled_e1(x[nz])
    return out


def dispersion_radicand(k, eta, epsilon_dd):
    """k^4 + eta k^2 (1 - epsilon_dd nu(k)); negative means unstable mode."""
    k = np.asarray(k, dtype=np.float64)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    k2 = k * k
    out = k2 * k2 + eta * k2 * _interaction_factor(k, epsilon_dd)
    return float(out[0]) if scalar else out


def dispersion(k, eta, epsilon_dd):
    """Quasiparticle energy 0.5 sqrt(radicand); nan where the mode is unstable."""
    rad = np.asarray(dispersion_radicand(k, eta, epsilon_dd))
    with np.errstate(invalid="ignore"):
        out = 0.5 * np.sqrt(rad)
    return float(out) if out.ndim == 0 else out


def dispersion_prime(k, eta, epsilon_dd):
    """Analytic d(dispersion)/dk for k > 0."""
    k = np.asarray(k, dtype=np.float64)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    k2 = k * k
    fac = _interaction_factor(k, epsilon_dd)
    nup = nu_tilde_prime(k)
    rad = k2 * k2 + eta * k2 * fac
    rprime = 4.0 * k2 * k + 2.0 * eta * k * fac - eta * k2 * epsilon_dd * nup
    with np.errstate(invalid="ignore", divide="ignore"):
        out = rprime / (4.0 * np.sqrt(rad))
    return float(out[0]) if scalar else out


def _osc_factors(s):
    """(s - sin s)/s^2 and (1 - cos s)/s^2, series-protected at small s."""
    small = s < 0.5
    s_ = np.where(small, 1.0, s)  # keep the direct branch division safe
    g1 = (s_ - np.sin(s_)) / (s_ * s_)
    if small.any():
        ss = s[small]
        q = ss * ss
        ser = (ss / 6.0) * (1.0 - q / 20.0 * (1.0 - q / 42.0 * (1.0 - q / 72.0 * (1.0 - q / 110.0))))
        g1 = np.where(small, 0.0, g1)
        g1[small] = ser
    h = np.sin(0.5 * s)
    g2 = 2.0 * h * h / np.where(s > 0.0, s * s, 1.0)
    g2 = np.where(s > 0.0, g2, 0.5)
    return g1, g2


def _coth(u):
    """coth(u) for u > 0, stable at both ends."""
    out = np.empty_like(u)
    small = u < 1e-4
    big = u > 19.0  # 2/(e^38 - 1) is below double resolution of 1
    mid = ~(small | big)
    if small.any():
        us = u[small]
        out[small] = 1.0 / us + us / 3.0
    if big.any():
        out[big] = 1.0
    if mid.any():
        um = u[mid]
        out[mid] = 1.0 + 2.0 / np.expm1(2.0 * um)
    return out


def kernel_integrands(k, t, eta, epsilon_dd, ell_sq, inv_2t):
    """Unit-coupling integrands of the two dephasing kernels at time t.

    Returns (f_delta, f_gamma) with
      f_delta = w(k) (e t - sin(e t)) / (e^2 t),
      f_gamma = w(k) coth(e/(2T)) (1 - cos(e t)) / (e^2 t),
    where e = dispersion(k) and w(k) = k^2 exp(-k^2 ell_sq / 2) / e.
    ``inv_2t`` is 1/(2T); pass 0 for the zero-temperature limit (coth -> 1).
    """
    k = np.asarray(k, dtype=np.float64)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    k2 = k * k
    rad = k2 * k2 + eta * k2 * _interaction_factor(k, epsilon_dd)
    e = 0.5 * np.sqrt(rad)
    w = k2 * np.exp(-0.5 * k2 * ell_sq) / e
    s = e * t
    g1, g2 = _osc_factors(s)
    f_delta = w * t * g1
    if inv_2t > 0.0:
        cf = _coth(e * inv_2t)
    else:
        cf = 1.0
    f_gamma = w * cf * t * g2
    if scalar:
        return float(f_delta[0]), float(f_gamma[0])
    return f_delta, f_gamma


def dinf_integrand(k, eta, epsilon_dd, ell_sq):
    """Unit-coupling integrand of the long-time kernel plateau: w(k)/e(k)."""
    k = np.asarray(k, dtype=np.float64)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    k2 = k * k
    rad = k2 * k2 + eta * k2 * _interaction_factor(k, epsilon_dd)
    out = k2 * np.exp(-0.5 * k2 * ell_sq) / (0.25 * rad)
    return float(out[0]) if scalar else out
