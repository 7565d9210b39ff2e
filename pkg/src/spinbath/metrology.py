"""Metrology payload: spin squeezing, quantum Fisher information, cat fidelity.

All moments are taken on the trace-normalized state; under one-body loss the
bare map is trace-decreasing and the survival probability must not leak into
variance ratios.  The closed-form helpers in this module are independent
oracles: they never call the density-matrix machinery, which is exactly what
makes them useful as cross-checks.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import MeanSpinError
from .spin_dynamics import cat_state, collective_operator

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SqueezingResult:
    """Ramsey squeezing parameter and the frame it was minimized in.

    phi_opt is the angle of the minimal-variance quadrature in the tangent
    plane of the mean-spin direction; mean_spin_direction is (polar, azimuth)
    of <J> on the Bloch sphere.
    """

    xi2: float
    phi_opt: float
    mean_spin_direction: tuple


@dataclass(frozen=True)
class LossyMoments:
    """First and second collective-spin moments, NOT trace-normalized."""

    jp: complex
    jp2: complex
    jz: float
    jz2: float
    jp_2jz1: complex


def _frame_moments(state):
    """(ex, ey, ez, Z, W, zz, K) on the normalized state."""
    rho = state.normalized()
    n = state.n_atoms
    jp = collective_operator(n, "+")
    jz = collective_operator(n, "z")
    jp_val = rho.expectation(jp)
    ex, ey = jp_val.real, jp_val.imag
    ez = rho.expectation(jz).real
    z_val = rho.expectation(jp @ jp)
    w_val = rho.expectation(jp @ (2.0 * jz + np.eye(n + 1)))
    zz = rho.expectation(jz @ jz).real
    j = 0.5 * n
    return ex, ey, ez, z_val, w_val, zz, j * (j + 1.0)


def squeezing_parameter(state):
    """Ramsey squeezing parameter of a Dicke-basis state.

    Minimizes the spin variance over the plane perpendicular to the mean spin
    using the exact quadratic form in the tangent-frame second moments; raises
    MeanSpinError when |<J>| is too small to define that plane.
    """
    ex, ey, ez, z_val, w_val, zz, big_k = _frame_moments(state)
    n = state.n_atoms
    j = 0.5 * n
    length = math.sqrt(ex * ex + ey * ey + ez * ez)
    if length < 1e-13 * j:
        raise MeanSpinError(
            f"mean spin length {length:.3e} too small for a squeezing frame"
        )
    polar = math.acos(max(-1.0, min(1.0, ez / length)))
    azimuth = math.atan2(ey, ex)
    st, ct = math.sin(polar), math.cos(polar)
    z_rot = z_val * cmath.exp(-2j * azimuth)
    w_rot = w_val * cmath.exp(-1j * azimuth)
    a = (0.5 * st * st) * (big_k - 3.0 * zz) \
        - 0.5 * (1.0 + ct * ct) * z_rot.real + st * ct * w_rot.real
    b = ct * z_rot.imag - st * w_rot.imag
    c = big_k - zz - (0.5 * st * st) * (big_k - 3.0 * zz) \
        - (0.5 * st * st) * z_rot.real - st * ct * w_rot.real
    v_min = 0.5 * (c - math.hypot(a, b))
    xi2 = n * v_min / (length * length)
    phi_opt = 0.5 * (math.pi + math.atan2(b, a))
    return SqueezingResult(xi2, phi_opt, (polar, azimuth))


def squeezing_closed_form(t, delta_t, gamma_t, n_atoms):
    """Loss-free closed form of (xi2, phi_opt) from a coherent state along +x.

    Valid for gamma_loss = 0 only.  delta_t and gamma_t are the kernel values
    at time t.  Fails where cos(t*delta) = 0 (mean spin vanishes there).
    """
    if n_atoms < 2:
        raise ValueError("squeezing needs at least two atoms")
    n = n_atoms
    phase = t * delta_t
    deph = t * gamma_t
    cd = math.cos(phase)
    if cd == 0.0:
        raise MeanSpinError("mean spin vanishes at accumulated phase pi/2")
    a_til = 1.0 - math.cos(2.0 * phase) ** (n - 2) * math.exp(-4.0 * deph)
    b_til = -4.0 * math.sin(phase) * cd ** (n - 2) * math.exp(-deph)
    hyp = math.hypot(a_til, b_til)
    xi2 = (4.0 + (n - 1.0) * (a_til - hyp)) \
        / (4.0 * math.exp(-2.0 * deph) * cd ** (2 * n - 2))
    phi_opt = 0.5 * (math.pi + math.atan2(-b_til, a_til))
    return xi2, phi_opt


def lossy_moments_oracle(t, delta_t, gamma_t, gamma_loss, lambda_prime, n_atoms):
    """Closed-form unnormalized moments from a coherent state along +x.

    Exact for the element-wise dephasing + one-body-loss map at any loss rate;
    the returned values carry the decaying trace, matching direct operator
    traces on the unnormalized evolved state.
    """
    n = n_atoms
    j = 0.5 * n
    g = gamma_loss * t
    d = delta_t * t
    deph = gamma_t * t
    lam = cmath.exp(1j * lambda_prime * t)
    decay = math.exp(-n * g)
    base = complex(math.cos(d) * math.cosh(g), math.sin(d) * math.sinh(g))
    base2 = complex(math.cos(2.0 * d) * math.cosh(g), math.sin(2.0 * d) * math.sinh(g))
    jp = j * lam * decay * math.exp(-deph) * base ** (n - 1)
    jp2 = j * (j - 0.5) * lam * lam * decay * math.exp(-4.0 * deph) * base2 ** (n - 2)
    jz = -j * math.sinh(g) * math.cosh(g) ** (n - 1) * decay
    jz2 = 0.5 * j * decay * math.cosh(g) ** (n - 2) * (1.0 + n * math.sinh(g) ** 2)
    zc = complex(g, d)
    jp_2jz1 = -j * (n - 1.0) * lam * decay * math.exp(-deph) \
        * cmath.sinh(zc) * cmath.cosh(zc) ** (n - 2)
    return LossyMoments(jp=jp, jp2=jp2, jz=jz, jz2=jz2, jp_2jz1=jp_2jz1)


def qfi_matrix(state, eigen_cutoff=1e-12):
    """3x3 quantum Fisher information matrix for collective rotations.

    Requires a unit-trace state (normalize first); eigenvalue pairs whose
    populations sum below ``eigen_cutoff`` are dropped from the sum, the
    standard regularization of the rank-deficient case.
    """
    tr = state.trace
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"qfi_matrix needs a unit-trace state, got trace {tr:.6g}")
    w, v = np.linalg.eigh(state.rho)
    ops = [collective_operator(state.n_atoms, ax) for ax in ("x", "y", "z")]
    rotated = [v.conj().T @ op @ v for op in ops]
    psum = w[:, None] + w[None, :]
    pdiff = w[:, None] - w[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        weights = np.where(psum > eigen_cutoff, pdiff * pdiff / psum, 0.0)
    out = np.empty((3, 3))
    for i in range(3):
        for k in range(i, 3):
            val = 2.0 * float(np.sum(weights * (rotated[i] * rotated[k].conj())).real)
            out[i, k] = val
            out[k, i] = val
    return out


def qfi_max(state, eigen_cutoff=1e-12):
    """Largest QFI over rotation axes and its direction (unit vector).

    The direction sign is fixed by picking the lexicographically larger of
    +/- the eigenvector, so results are reproducible across LAPACK builds.
    """
    mat = qfi_matrix(state, eigen_cutoff)
    vals, vecs = np.linalg.eigh(mat)
    direction = vecs[:, -1]
    if tuple(direction) < tuple(-direction):
        direction = -direction
    return float(vals[-1]), direction


def _transition_weight(a, b):
    s = a + b
    if s <= 1e-12:
        return 0.0
    return (a - b) ** 2 / s


def qfi_n2_analytic(t, delta_t, gamma_t):
    """Closed-form QFI for N = 2 under pure collective dephasing.

    Returns (c_xx, c_perp, f_q_max): the x-axis Fisher information, the
    optimum over the y-z plane, and their maximum.  Loss-free case only.
    """
    d = delta_t * t
    g = gamma_t * t
    e2 = math.exp(2.0 * g)
    e4 = math.exp(4.0 * g)
    e6 = math.exp(6.0 * g)
    # population sector: one doubly-degenerate odd level and two even levels
    xi = math.sqrt((1.0 - e4) ** 2 + 16.0 * e6)
    p_odd = (1.0 - math.exp(-4.0 * g)) / 4.0
    p_plus = math.exp(-4.0 * g) * (1.0 + 3.0 * e4 + xi) / 8.0
    p_minus = math.exp(-4.0 * g) * (1.0 + 3.0 * e4 - xi) / 8.0
    n_plus_sq = 16.0 * e6 + (1.0 - e4 - xi) ** 2
    n_minus_sq = 16.0 * e6 + (1.0 - e4 + xi) ** 2
    r_plus = 4.0 * math.exp(3.0 * g) / math.sqrt(n_plus_sq)
    r_minus = 4.0 * math.exp(3.0 * g) / math.sqrt(n_minus_sq)
    y_plus = -(1.0 - e4 - xi) / math.sqrt(n_plus_sq)
    y_minus = -(1.0 - e4 + xi) / math.sqrt(n_minus_sq)

    sinh2 = math.sinh(2.0 * g)
    c_xx = (4.0 * sinh2 * sinh2 + 16.0 * e2) / (1.0 + 3.0 * e4) * (
        1.0 - 16.0 * math.cos(d) ** 2 / (math.exp(-6.0 * g) * (1.0 - e4) ** 2 + 16.0)
    )
    w_p = _transition_weight(p_odd, p_plus)
    w_m = _transition_weight(p_odd, p_minus)
    c_yy = 4.0 * (w_m * y_minus ** 2 + w_p * y_plus ** 2)
    c_zz = 4.0 * (w_p * r_plus ** 2 + w_m * r_minus ** 2)
    c_yz = -4.0 * math.sin(d) * (w_p * y_plus * r_plus + w_m * y_minus * r_minus)
    c_perp = 0.5 * (c_yy + c_zz) + math.hypot(0.5 * (c_yy - c_zz), c_yz)
    return c_xx, c_perp, max(c_xx, c_perp)


def optimal_time(kernels):
    """First time with accumulated phase t * delta(t) = pi/2.

    Solved by bisection on the linearly interpolated kernel table; the
    accumulated phase is nondecreasing in t, so the first grid crossing
    brackets the unique solution.  Raises ValueError when the grid never
    reaches the target phase.
    """
    target = 0.5 * math.pi
    phase = kernels.times * kernels.delta
    above = phase >= target
    if not above.any():
        raise ValueError(
            "accumulated phase never reaches pi/2 inside the kernel grid; "
            "extend the grid or increase the coupling"
        )
    i = int(np.argmax(above))
    if phase[i] == target:
        return float(kernels.times[i])
    if i == 0:
        raise ValueError("kernel grid starts beyond the pi/2 crossing")
    lo, hi = float(kernels.times[i - 1]), float(kernels.times[i])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * kernels.interpolate(mid)[0] < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def cat_fidelity(state):
    """Overlap amplitude between the normalized state and the target cat."""
    target = cat_state(state.n_atoms)
    rho = state.normalized().rho
    val = float(np.real(target.conj() @ rho @ target))
    return math.sqrt(min(1.0, max(0.0, val)))
