"""Quasi-1D dipolar-condensate reservoir: spectrum, stability, dephasing kernels.

Everything is dimensionless: energies in units of the transverse trap quantum
of the reservoir, times in inverse trap frequencies, wavenumbers in units of
the inverse reservoir oscillator width.  ``ReservoirParams`` collects the five
numbers the theory actually depends on; ``lab_units_to_dimensionless``
produces them from laboratory quantities.

The two dephasing kernels are

    delta(t) = integral dk w(k) (e t - sin(e t)) / (e t)^2 * t
    gamma(t) = integral dk w(k) coth(e/(2T)) (1 - cos(e t)) / (e t)^2 * t

with e = e(k) the Bogoliubov energy and w(k) the coupling weight.  Both are
evaluated by adaptive Gauss-Kronrod quadrature with panel seeding that tracks
the oscillation phase e(k) t, so large times stay cheap and accurate.
"""

import math
import threading
from dataclasses import dataclass, replace

import numpy as np

from . import _core_py, backend
from .errors import ExtremumSingularityError, QuadratureError, StabilityError
from .quadrature import adaptive_gk

# CODATA 2022
HBAR = 1.054571817e-34
ATOMIC_MASS = 1.66053906892e-27
VACUUM_PERMEABILITY = 1.25663706127e-6
BOHR_MAGNETON = 9.2740100657e-24
BOHR_RADIUS = 5.29177210544e-11

DEFAULT_ABS_TOL = 1e-10
DEFAULT_K_MAX_SIGMA = 9.0
_MAX_PHASE_EDGES = 16384
_MESH_POINTS = 1537


def incomplete_gamma0(x):
    """Incomplete gamma function Gamma(0, x) for x > 0 (scalar or array)."""
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(x_arr <= 0.0):
        raise ValueError("incomplete_gamma0 requires x > 0")
    return backend.gamma0(x)


def dipole_form_factor(k):
    """Momentum-space form factor of the transverse-averaged dipolar interaction.

    Equals 1 at k = 0, decreases monotonically, and tends to -2 as k grows;
    the sign change is what lets one interaction sign stabilize both
    attractive and repulsive effective couplings.
    """
    k_arr = np.asarray(k, dtype=np.float64)
    if np.any(k_arr < 0.0):
        raise ValueError("wavenumber must be >= 0")
    return backend.nu_tilde(k)


def effective_epsilon_dd(epsilon_dd, tilt_angle):
    """Dipolar coupling rescaled by polarization tilt: eps * (1 - 3 sin^2(a) / 2).

    Vanishes at the magic angle sin^2(a) = 2/3 regardless of ``epsilon_dd``.
    """
    s = math.sin(tilt_angle)
    return epsilon_dd * (1.0 - 1.5 * s * s)


@dataclass(frozen=True)
class ReservoirParams:
    """Dimensionless description of the condensate reservoir.

    eta        interaction scale, 8 * linear density * bath scattering length
    epsilon_dd relative dipolar strength in [-1, 1] (tilt already folded in)
    theta      overall coupling prefactor of the spin-reservoir interaction
    ell_ratio  spin-to-reservoir transverse width ratio (sets the UV cutoff)
    temperature reservoir temperature in trap-quantum units; 0 disables the
               thermal factor exactly
    """

    eta: float
    epsilon_dd: float
    theta: float
    ell_ratio: float = 1.0
    temperature: float = 0.0

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ValueError("eta must be positive")
        if not -1.0 <= self.epsilon_dd <= 1.0:
            raise ValueError("epsilon_dd must lie in [-1, 1]")
        if not self.theta > 0.0:
            raise ValueError("theta must be positive")
        if not self.ell_ratio > 0.0:
            raise ValueError("ell_ratio must be positive")
        if self.temperature < 0.0:
            raise ValueError("temperature must be >= 0")

    @property
    def sound_speed(self):
        """Long-wavelength phonon speed sqrt(eta (1 - epsilon_dd)) / 2."""
        return 0.5 * math.sqrt(self.eta * (1.0 - self.epsilon_dd))

    def k_max(self, k_max_sigma=DEFAULT_K_MAX_SIGMA):
        """Integration cutoff where the Gaussian coupling weight is negligible."""
        return k_max_sigma / self.ell_ratio


@dataclass(frozen=True)
class LabParams:
    """Laboratory description of the mixture (SI units unless noted).

    density              condensate linear density, 1/m
    a_bath               bath-bath s-wave scattering length, m
    a_cross              spin-bath s-wave scattering length, m
    mass_spin_u          mass of a spin atom, atomic mass units
    mass_bath_u          mass of a bath atom, atomic mass units
    omega_perp           transverse trap frequency of the bath, rad/s
    omega_spin           transverse trap frequency of the spin atoms, rad/s
    magnetic_moment_mub  bath magnetic moment, Bohr magnetons
    tilt_angle           dipole polarization tilt from the weak axis, rad
    dipole_length        optional override of the dipolar length a_dd, m
    """

    density: float
    a_bath: float
    a_cross: float
    mass_spin_u: float
    mass_bath_u: float
    omega_perp: float
    omega_spin: float
    magnetic_moment_mub: float
    tilt_angle: float = 0.0
    dipole_length: float = None

    def __post_init__(self):
        for name in ("density", "a_bath", "mass_spin_u", "mass_bath_u",
                     "omega_perp", "omega_spin"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


def lab_units_to_dimensionless(lab):
    """Convert LabParams to (ReservoirParams, level_shift).

    The returned level shift is the static mean-field detuning of the upper
    spin state in trap-quantum units; feed it into the rotating-frame
    frequency of the evolution if the bare value matters.
    """
    m_a = lab.mass_spin_u * ATOMIC_MASS
    m_b = lab.mass_bath_u * ATOMIC_MASS
    ell_b = math.sqrt(HBAR / (m_b * lab.omega_perp))
    ell_a = math.sqrt(HBAR / (m_a * lab.omega_spin))
    if lab.dipole_length is not None:
        a_dd = lab.dipole_length
    else:
        mu = lab.magnetic_moment_mub * BOHR_MAGNETON
        a_dd = VACUUM_PERMEABILITY * mu * mu * m_b / (12.0 * math.pi * HBAR * HBAR)
    eta = 8.0 * lab.density * lab.a_bath
    width_sq = ell_a * ell_a + ell_b * ell_b
    theta = (2.0 * lab.density * ell_b**3 * lab.a_cross**2 * (m_a + m_b) ** 2
             / (math.pi * m_a * m_a * width_sq * width_sq))
    epsilon = effective_epsilon_dd(a_dd / lab.a_bath, lab.tilt_angle)
    if not -1.0 <= epsilon <= 1.0:
        raise ValueError(
            f"effective epsilon_dd = {epsilon:.6g} outside [-1, 1]; "
            "adjust the polarization tilt"
        )
    m_ab = m_a * m_b / (m_a + m_b)
    level_shift = (2.0 * HBAR * lab.a_cross * lab.density
                   / (m_ab * width_sq * lab.omega_perp))
    params = ReservoirParams(
        eta=eta,
        epsilon_dd=epsilon,
        theta=theta,
        ell_ratio=ell_a / ell_b,
        temperature=0.0,
    )
    return params, level_shift


def dipole_length_si(magnetic_moment_mub, mass_bath_u):
    """Dipolar length a_dd in meters for a given moment and mass."""
    mu = magnetic_moment_mub * BOHR_MAGNETON
    m_b = mass_bath_u * ATOMIC_MASS
    return VACUUM_PERMEABILITY * mu * mu * m_b / (12.0 * math.pi * HBAR * HBAR)


def bogoliubov_energy(k, params):
    """Quasiparticle energy; raises StabilityError where the mode is imaginary."""
    k_arr = np.asarray(k, dtype=np.float64)
    if np.any(k_arr < 0.0):
        raise ValueError("wavenumber must be >= 0")
    rad = np.asarray(backend.dispersion_radicand(k_arr, params.eta, params.epsilon_dd))
    bad = rad < 0.0
    if bad.any():
        k_bad = float(np.atleast_1d(k_arr)[np.atleast_1d(bad)][0])
        raise StabilityError(
            f"imaginary Bogoliubov energy at k = {k_bad:.6g}", k=k_bad
        )
    out = 0.5 * np.sqrt(rad)
    return float(out) if np.ndim(k) == 0 else out


def bogoliubov_uv(k, params):
    """Bogoliubov coefficients (u, v) with u^2 - v^2 = 1; k = 0 is excluded."""
    k_arr = np.asarray(k, dtype=np.float64)
    if np.any(k_arr <= 0.0):
        raise ValueError("bogoliubov_uv requires k > 0 (phonon limit diverges)")
    e = np.asarray(bogoliubov_energy(k_arr, params))
    free = 0.5 * k_arr * k_arr
    sr = np.sqrt(np.sqrt(e / free))  # (e/E)^(1/4) appears twice below
    sr = sr * sr
    u = 0.5 * (sr + 1.0 / sr)
    v = 0.5 * (sr - 1.0 / sr)
    if np.ndim(k) == 0:
        return float(u), float(v)
    return u, v


def coupling_weight(k, params):
    """Reservoir coupling weight w(k) = theta k^2 exp(-k^2 ell^2/2) / e(k)."""
    k_arr = np.asarray(k, dtype=np.float64)
    if np.any(k_arr <= 0.0):
        raise ValueError("coupling_weight requires k > 0")
    e = np.asarray(bogoliubov_energy(k_arr, params))
    ell_sq = params.ell_ratio * params.ell_ratio
    out = params.theta * k_arr * k_arr * np.exp(-0.5 * k_arr * k_arr * ell_sq) / e
    return float(out) if np.ndim(k) == 0 else out


@dataclass(frozen=True)
class StabilityReport:
    """Result of scanning the dispersion radicand over a wavenumber window."""

    stable: bool
    k_unstable: float        # smallest unstable wavenumber found, nan if stable
    radicand_min: float
    k_at_min: float


def stability_scan(params, k_max=None, n_samples=2001):
    """Scan [0, k_max] for imaginary Bogoliubov modes.

    Unlike ``bogoliubov_energy`` this never raises: it reports.  The onset
    wavenumber is refined by bisection to 1e-8 between the last stable and the
    first unstable sample.
    """
    if k_max is None:
        k_max = params.k_max()
    ks = np.linspace(0.0, k_max, n_samples)[1:]
    rad = np.asarray(backend.dispersion_radicand(ks, params.eta, params.epsilon_dd))
    i_min = int(np.argmin(rad))
    neg = rad < 0.0
    if not neg.any():
        return StabilityReport(True, math.nan, float(rad[i_min]), float(ks[i_min]))
    first = int(np.argmax(neg))
    lo = 0.0 if first == 0 else float(ks[first - 1])
    hi = float(ks[first])
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if backend.dispersion_radicand(mid, params.eta, params.epsilon_dd) < 0.0:
            hi = mid
        else:
            lo = mid
    return StabilityReport(False, hi, float(rad[i_min]), float(ks[i_min]))


# ---------------------------------------------------------------------------
# dispersion meshes: dense tabulation + monotone segmentation, cached per
# (eta, epsilon_dd, k_max) because every kernel/spectral call needs them
# ---------------------------------------------------------------------------


class _DispersionMesh:
    def __init__(self, eta, epsilon_dd, k_max):
        self.eta = eta
        self.epsilon_dd = epsilon_dd
        self.k_max = k_max
        k_dense = np.unique(np.concatenate((
            np.geomspace(k_max * 1e-7, k_max, _MESH_POINTS),
            np.linspace(0.0, k_max, _MESH_POINTS)[1:],
        )))
        rad = np.asarray(backend.dispersion_radicand(k_dense, eta, epsilon_dd))
        if (rad < 0.0).any():
            k_bad = float(k_dense[np.argmax(rad < 0.0)])
            raise StabilityError(
                f"reservoir unstable near k = {k_bad:.6g} "
                f"(eta={eta:g}, epsilon_dd={epsilon_dd:g})",
                k=k_bad,
            )
        self.k_dense = k_dense
        self.e_dense = 0.5 * np.sqrt(rad)
        dp = np.asarray(backend.dispersion_prime(k_dense, eta, epsilon_dd))
        self.extrema = self._refine_extrema(k_dense, dp)
        bounds = np.concatenate(([0.0], self.extrema, [k_max]))
        self.segment_bounds = bounds
        self.segment_energies = np.concatenate((
            [0.0],
            np.asarray(backend.dispersion(self.extrema, eta, epsilon_dd), dtype=np.float64).reshape(-1),
            [float(backend.dispersion(k_max, eta, epsilon_dd))],
        ))
        self.e_max = float(max(self.e_dense.max(), self.segment_energies.max()))
        # index ranges of k_dense per monotone segment, for phase inversion
        self._segment_slices = []
        for i in range(len(bounds) - 1):
            lo, hi = bounds[i], bounds[i + 1]
            sel = (k_dense >= lo) & (k_dense <= hi)
            kk = k_dense[sel]
            ee = self.e_dense[sel]
            e_lo = self.segment_energies[i]
            e_hi = self.segment_energies[i + 1]
            kk = np.concatenate(([lo], kk, [hi]))
            ee = np.concatenate(([e_lo], ee, [e_hi]))
            kk, keep = np.unique(kk, return_index=True)
            ee = ee[keep]
            self._segment_slices.append((kk, ee, e_hi >= e_lo))

    def _refine_extrema(self, k_dense, dp):
        flips = np.flatnonzero(np.sign(dp[:-1]) * np.sign(dp[1:]) < 0.0)
        out = []
        for i in flips:
            lo, hi = float(k_dense[i]), float(k_dense[i + 1])
            f_lo = float(dp[i])
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                f_mid = float(backend.dispersion_prime(mid, self.eta, self.epsilon_dd))
                if f_mid == 0.0:
                    lo = hi = mid
                    break
                if (f_lo > 0.0) == (f_mid > 0.0):
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
                if hi - lo <= 1e-13 * max(1.0, hi):
                    break
            out.append(0.5 * (lo + hi))
        return np.asarray(out, dtype=np.float64)

    def invert_energies(self, targets):
        """Wavenumbers where the dispersion crosses each target energy."""
        hits = []
        for kk, ee, increasing in self._segment_slices:
            if increasing:
                sel = (targets > ee[0]) & (targets < ee[-1])
                if sel.any():
                    hits.append(np.interp(targets[sel], ee, kk))
            else:
                sel = (targets > ee[-1]) & (targets < ee[0])
                if sel.any():
                    hits.append(np.interp(targets[sel], ee[::-1], kk[::-1]))
        if hits:
            return np.concatenate(hits)
        return np.empty(0)


_MESH_CACHE = {}
_MESH_LOCK = threading.Lock()


def _mesh(params, k_max_sigma=DEFAULT_K_MAX_SIGMA):
    key = (params.eta, params.epsilon_dd, params.k_max(k_max_sigma))
    with _MESH_LOCK:
        mesh = _MESH_CACHE.get(key)
    if mesh is None:
        mesh = _DispersionMesh(*key)
        with _MESH_LOCK:
            _MESH_CACHE.setdefault(key, mesh)
    return mesh


# ---------------------------------------------------------------------------
# spectral density
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral density at one frequency, with root bookkeeping."""

    omega: float
    value: float
    branch_count: int
    roots: np.ndarray


def _roots_at(omega, mesh, bisection_iters=90):
    """All k with e(k) = omega, one per monotone segment, by bisection."""
    roots = []
    bounds = mesh.segment_bounds
    energies = mesh.segment_energies
    for i in range(len(bounds) - 1):
        e_lo, e_hi = energies[i], energies[i + 1]
        if not (min(e_lo, e_hi) < omega <= max(e_lo, e_hi)):
            continue
        lo, hi = float(bounds[i]), float(bounds[i + 1])
        increasing = e_hi >= e_lo
        for _ in range(bisection_iters):
            mid = 0.5 * (lo + hi)
            e_mid = float(backend.dispersion(mid, mesh.eta, mesh.epsilon_dd))
            above = e_mid > omega
            if above == increasing:
                hi = mid
            else:
                lo = mid
        roots.append(0.5 * (lo + hi))
    return np.asarray(roots, dtype=np.float64)


def spectral_density_details(omega, params, k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """SpectralPoint at a single frequency (value, branch count, roots)."""
    if not omega > 0.0:
        raise ValueError("spectral density is defined for omega > 0")
    mesh = _mesh(params, k_max_sigma)
    roots = _roots_at(omega, mesh)
    if roots.size == 0:
        return SpectralPoint(omega, 0.0, 0, roots)
    slopes = np.abs(np.asarray(backend.dispersion_prime(roots, params.eta, params.epsilon_dd)))
    if (slopes < 1e-10).any():
        k_flat = float(roots[np.argmax(slopes < 1e-10)])
        raise ExtremumSingularityError(
            f"spectral density diverges at omega = {omega:.6g}: dispersion "
            f"extremum at k = {k_flat:.6g}"
        )
    ell_sq = params.ell_ratio * params.ell_ratio
    f = roots * roots * np.exp(-0.5 * roots * roots * ell_sq)
    value = params.theta * float((f / slopes).sum()) / omega
    return SpectralPoint(omega, value, int(roots.size), roots)


def band_top(params, k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """Largest Bogoliubov energy inside the integration window."""
    return _mesh(params, k_max_sigma).e_max


def spectral_density(omega, params, k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """Reservoir spectral density J(omega) >= 0; zero above the band edge."""
    om = np.asarray(omega, dtype=np.float64)
    if om.ndim == 0:
        return spectral_density_details(float(om), params, k_max_sigma).value
    return np.array([
        spectral_density_details(float(w), params, k_max_sigma).value for w in om
    ])


def _spectral_batch(omega, mesh, theta, ell_sq, bisection_iters=90):
    """Vectorized J(omega) for quadrature nodes; ignores extremum checks.

    Only used inside frequency-space integrals where the integrable
    band-edge singularities are handled by panel placement.
    """
    total = np.zeros_like(omega)
    bounds = mesh.segment_bounds
    energies = mesh.segment_energies
    for i in range(len(bounds) - 1):
        e_lo, e_hi = energies[i], energies[i + 1]
        sel = (omega > min(e_lo, e_hi)) & (omega <= max(e_lo, e_hi))
        if not sel.any():
            continue
        w = omega[sel]
        increasing = e_hi >= e_lo
        lo = np.full(w.shape, bounds[i])
        hi = np.full(w.shape, bounds[i + 1])
        for _ in range(bisection_iters):
            mid = 0.5 * (lo + hi)
            above = np.asarray(backend.dispersion(mid, mesh.eta, mesh.epsilon_dd)) > w
            go_hi = above == increasing
            hi = np.where(go_hi, mid, hi)
            lo = np.where(go_hi, lo, mid)
        k = 0.5 * (lo + hi)
        slopes = np.abs(np.asarray(backend.dispersion_prime(k, mesh.eta, mesh.epsilon_dd)))
        slopes = np.maximum(slopes, 1e-300)
        total[sel] += theta * k * k * np.exp(-0.5 * k * k * ell_sq) / (slopes * w)
    return total


# ---------------------------------------------------------------------------
# dephasing kernels
# ---------------------------------------------------------------------------


def _kernel_edges(mesh, t):
    """Panel seed: segment bounds, a uniform baseline, one panel per 2 pi of
    oscillation phase e(k) t, and octave grading into k = 0.

    The grading matters at epsilon_dd = +1, where the vanishing phonon speed
    leaves the integrand with a log-type endpoint structure that uniform
    bisection resolves only one octave per refinement round."""
    parts = [np.linspace(0.0, mesh.k_max, 17), mesh.segment_bounds]
    span = mesh.e_max * t
    two_pi = 2.0 * math.pi
    n_ph = int(span // two_pi)
    if n_ph >= 1:
        n_ph = min(n_ph, _MAX_PHASE_EDGES)
        targets = np.linspace(span / n_ph, span, n_ph) / t
        parts.append(mesh.invert_energies(targets))
    edges = np.unique(np.concatenate(parts))
    first = edges[edges > 0.0][0]
    return np.concatenate((first * 2.0 ** np.arange(-54.0, 0.0), edges))


def _inv_2t(params):
    return 0.0 if params.temperature <= 0.0 else 0.5 / params.temperature


def _kernel_pair_unit(t, params, abs_tol, k_max_sigma):
    """(delta, gamma) at unit coupling prefactor."""
    if not t > 0.0:
        raise ValueError("kernel time must be positive")
    mesh = _mesh(params, k_max_sigma)
    ell_sq = params.ell_ratio * params.ell_ratio
    inv_2t = _inv_2t(params)

    def f(k):
        fd, fg = backend.kernel_integrands(
            k, t, params.eta, params.epsilon_dd, ell_sq, inv_2t
        )
        return np.stack((fd, fg))

    vals, _ = adaptive_gk(f, _kernel_edges(mesh, t), abs_tol)
    return float(vals[0]), float(vals[1])


def delta_kernel(t, params, abs_tol=DEFAULT_ABS_TOL, k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """Accumulated squeezing phase Delta(t) (dimensionless, >= 0)."""
    return params.theta * _kernel_pair_unit(t, params, abs_tol, k_max_sigma)[0]


def gamma_kernel(t, params, abs_tol=DEFAULT_ABS_TOL, k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """Dephasing exponent gamma(t) (dimensionless, >= 0)."""
    return params.theta * _kernel_pair_unit(t, params, abs_tol, k_max_sigma)[1]


def delta_infinity(params, abs_tol=DEFAULT_ABS_TOL, k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """Long-time limit of Delta(t): theta * integral w(k)/e(k) dk.

    Raises QuadratureError when the integral diverges, which happens exactly
    at epsilon_dd = +1 where the phonon speed vanishes and the integrand
    behaves like 1/(k^2 log k) near the origin.
    """
    mesh = _mesh(params, k_max_sigma)
    ell_sq = params.ell_ratio * params.ell_ratio

    def f(k):
        return backend.dinf_integrand(k, params.eta, params.epsilon_dd, ell_sq)

    edges = np.unique(np.concatenate((
        np.linspace(0.0, mesh.k_max, 17),
        mesh.segment_bounds,
        mesh.k_max * np.geomspace(1e-6, 0.1, 6),
    )))
    vals, _ = adaptive_gk(f, edges, abs_tol)
    return params.theta * float(vals[0])


@dataclass(frozen=True)
class KernelTable:
    """Tabulated dephasing kernels on a fixed time grid.

    ``delta_inf`` is nan when the plateau integral diverges (epsilon_dd = +1).
    """

    params: ReservoirParams
    times: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    delta_inf: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size < 2 or not (np.diff(t) > 0.0).all():
            raise ValueError("times must be a strictly increasing 1-D grid")
        if t[0] <= 0.0:
            raise ValueError("kernel times must be positive")

    def interpolate(self, t):
        """Linear interpolation of (delta, gamma); t must lie inside the grid."""
        t_arr = np.asarray(t, dtype=np.float64)
        if np.any(t_arr < self.times[0]) or np.any(t_arr > self.times[-1]):
            raise ValueError("interpolation time outside the tabulated grid")
        d = np.interp(t_arr, self.times, self.delta)
        g = np.interp(t_arr, self.times, self.gamma)
        if t_arr.ndim == 0:
            return float(d), float(g)
        return d, g

    def merged_with(self, other):
        """Union of two tables on the same reservoir (for grid refinement)."""
        if other.params != self.params:
            raise ValueError("cannot merge kernel tables of different reservoirs")
        t = np.concatenate((self.times, other.times))
        d = np.concatenate((self.delta, other.delta))
        g = np.concatenate((self.gamma, other.gamma))
        t, idx = np.unique(t, return_index=True)
        dinf = self.delta_inf if math.isfinite(self.delta_inf) else other.delta_inf
        return KernelTable(self.params, t, d[idx], g[idx], dinf)


_TABLE_CACHE = {}
_TABLE_LOCK = threading.Lock()


def clear_caches():
    """Drop memoized dispersion meshes and kernel tables.

    Only needed when proving that results do not depend on cache state;
    normal code never has to call this.
    """
    with _MESH_LOCK:
        _MESH_CACHE.clear()
    with _TABLE_LOCK:
        _TABLE_CACHE.clear()


def build_kernel_table(params, times, abs_tol=DEFAULT_ABS_TOL,
                       k_max_sigma=DEFAULT_K_MAX_SIGMA, include_plateau=True):
    """Evaluate both kernels on a time grid, with caching.

    The quadrature runs at unit coupling prefactor and is scaled by
    ``params.theta`` afterwards, so the kernels are exactly linear in theta
    and sweeps over theta reuse the cache.  The stated tolerance applies to
    the unit-coupling integrals.
    """
    times = np.asarray(times, dtype=np.float64)
    key = (params.eta, params.epsilon_dd, params.ell_ratio, params.temperature,
           k_max_sigma, abs_tol, include_plateau, times.tobytes())
    with _TABLE_LOCK:
        cached = _TABLE_CACHE.get(key)
    if cached is None:
        delta1 = np.empty(times.size)
        gamma1 = np.empty(times.size)
        for i, t in enumerate(times):
            delta1[i], gamma1[i] = _kernel_pair_unit(
                float(t), params, abs_tol, k_max_sigma
            )
        dinf1 = math.nan
        if include_plateau:
            unit = replace(params, theta=1.0)
            try:
                dinf1 = delta_infinity(unit, abs_tol, k_max_sigma)
            except QuadratureError:
                dinf1 = math.nan
        cached = (delta1, gamma1, dinf1)
        with _TABLE_LOCK:
            _TABLE_CACHE.setdefault(key, cached)
    delta1, gamma1, dinf1 = cached
    return KernelTable(
        params=params,
        times=times.copy(),
        delta=params.theta * delta1,
        gamma=params.theta * gamma1,
        delta_inf=params.theta * dinf1,
    )


# ---------------------------------------------------------------------------
# frequency-space cross-checks
# ---------------------------------------------------------------------------


def dispersion_weight_integral(params, g, abs_tol=1e-9,
                               k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """integral dk w(k) g(e(k)) over the stable band (wavenumber route)."""
    mesh = _mesh(params, k_max_sigma)
    ell_sq = params.ell_ratio * params.ell_ratio

    def f(k):
        e = np.asarray(backend.dispersion(k, params.eta, params.epsilon_dd))
        w = k * k * np.exp(-0.5 * k * k * ell_sq) / e
        return params.theta * w * g(e)

    edges = np.unique(np.concatenate((
        np.linspace(0.0, mesh.k_max, 33),
        mesh.segment_bounds,
        mesh.k_max * np.geomspace(1e-6, 0.1, 8),
    )))
    vals, _ = adaptive_gk(f, edges, abs_tol)
    return float(vals[0])


def spectral_weight_integral(params, g, abs_tol=1e-9,
                             k_max_sigma=DEFAULT_K_MAX_SIGMA, extra_edges=()):
    """integral domega J(omega) g(omega) (frequency route).

    Mathematically identical to ``dispersion_weight_integral`` for any g; the
    two are computed by unrelated quadratures, which makes the pair a strong
    self-test of the spectral density.
    """
    mesh = _mesh(params, k_max_sigma)
    ell_sq = params.ell_ratio * params.ell_ratio
    theta = params.theta

    def f(omega):
        return _spectral_batch(omega, mesh, theta, ell_sq) * g(omega)

    e_top = mesh.e_max
    edges = np.unique(np.concatenate((
        np.linspace(0.0, e_top, 33),
        mesh.segment_energies,
        e_top * np.geomspace(1e-6, 0.1, 8),
        np.asarray(extra_edges, dtype=np.float64),
    )))
    vals, _ = adaptive_gk(f, edges, abs_tol)
    return float(vals[0])


def delta_kernel_spectral_route(t, params, abs_tol=1e-9,
                                k_max_sigma=DEFAULT_K_MAX_SIGMA):
    """Delta(t) recomputed from J(omega); slow, for validation only."""
    if not t > 0.0:
        raise ValueError("kernel time must be positive")
    mesh = _mesh(params, k_max_sigma)

    def g(omega):
        s = omega * t
        g1, _ = _core_py._osc_factors(np.asarray(s, dtype=np.float64))
        return t * g1

    two_pi = 2.0 * math.pi
    span = mesh.e_max * t
    n_ph = int(span // two_pi)
    extra = ()
    if n_ph >= 1:
        n_ph = min(n_ph, _MAX_PHASE_EDGES)
        extra = np.linspace(span / n_ph, span, n_ph) / t
    return spectral_weight_integral(
        params, g, abs_tol, k_max_sigma, extra_edges=extra
    )
