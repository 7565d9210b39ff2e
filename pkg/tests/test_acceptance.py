"""End-to-end acceptance gate.

One test per release criterion; each prints a single PASS/FAIL line with the
measured numbers so a bare ``pytest tests/test_acceptance.py`` run reads as a
checklist.  Tolerances are the contractual ones and must not be loosened here.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from spinbath import (
    DickeState,
    EvolutionInputs,
    build_kernel_table,
    cat_fidelity,
    clear_caches,
    collective_operator,
    effective_epsilon_dd,
    evolve,
    figure_preset,
    lossy_moments_oracle,
    optimal_time,
    qfi_max,
    qfi_n2_analytic,
    squeezing_closed_form,
    squeezing_parameter,
)
from spinbath.config import PRESET_NAMES
from spinbath.reservoir import delta_kernel, delta_kernel_spectral_route
from spinbath.runner import run_scenario

from conftest import make_params


def report(capsys, num, name, ok, detail):
    with capsys.disabled():
        print(f"ACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def evolved_css(n, t, delta, gamma, loss=0.0, lam=0.0):
    return evolve(DickeState.coherent_plus_x(n),
                  EvolutionInputs(time=t, delta=delta, gamma=gamma,
                                  gamma_loss=loss, lambda_prime=lam))


def min_xi2_over_time(table, n, loss=0.0, times=None):
    if times is None:
        times = np.geomspace(1.0, 30.0, 25)
    best = math.inf
    for t in times:
        d, g = table.interpolate(float(t))
        state = evolved_css(n, float(t), d, g, loss=loss)
        best = min(best, squeezing_parameter(state.normalized()).xi2)
    return best


def test_criterion_1_cat_fidelity_reference_points(base_table, capsys):
    t0 = time.perf_counter()
    topt = optimal_time(base_table)
    d, g = base_table.interpolate(topt)
    targets = {10: 0.94, 30: 0.85, 50: 0.80}
    got = {}
    for n in targets:
        state = evolved_css(n, topt, d, g, lam=-n * d)
        got[n] = cat_fidelity(state)
    elapsed = time.perf_counter() - t0
    ok = all(abs(got[n] - want) <= 0.03 for n, want in targets.items())
    detail = ", ".join(f"N={n}: {got[n]:.4f} vs {targets[n]:.2f}+-0.03"
                       for n in targets) + f", {elapsed:.1f}s"
    report(capsys, 1, "cat fidelity at optimal time", ok, detail)
    assert ok, detail
    assert elapsed < 30.0


def test_criterion_2_qfi_n2_closed_form(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for dt in np.linspace(0.0, math.pi, 20):
        for gt in np.linspace(0.0, 0.5, 20):
            want = qfi_n2_analytic(1.0, dt, gt)[2]
            val, _ = qfi_max(evolved_css(2, 1.0, dt, gt))
            worst = max(worst, abs(val - want) / max(1.0, abs(want)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 1.0
    detail = f"worst rel dev {worst:.2e} <= 1e-8 on 20x20 grid, {elapsed:.2f}s < 1s"
    report(capsys, 2, "N=2 QFI closed form", ok, detail)
    assert ok, detail


def test_criterion_3_heisenberg_at_optimal_time(base_table, capsys):
    t0 = time.perf_counter()
    topt = optimal_time(base_table)
    d, _ = base_table.interpolate(topt)
    worst = 0.0
    for n in (2, 5, 10, 20, 50):
        val, _ = qfi_max(evolved_css(n, topt, d, 0.0))
        worst = max(worst, abs(val - n * n) / (n * n))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 5.0
    detail = f"worst rel dev {worst:.2e} <= 1e-6 for N in 2..50, {elapsed:.2f}s < 5s"
    report(capsys, 3, "dephasing-only QFI reaches N^2", ok, detail)
    assert ok, detail


def test_criterion_4_squeezing_closed_form(base_table, capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (10, 100):
        for t in np.geomspace(0.3, 20.0, 50):
            d, g = base_table.interpolate(float(t))
            want, _ = squeezing_closed_form(float(t), d, g, n)
            got = squeezing_parameter(evolved_css(n, float(t), d, g).normalized()).xi2
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 5.0
    detail = f"worst mixed dev {worst:.2e} <= 1e-10, N in (10, 100), {elapsed:.2f}s < 5s"
    report(capsys, 4, "squeezing closed form vs density route", ok, detail)
    assert ok, detail


def test_criterion_5_lossy_moments(capsys):
    t0 = time.perf_counter()
    t, delta, gamma, lam = 2.0, 0.3, 0.04, 0.7
    worst = 0.0
    for n in (2, 10, 40):
        jp = collective_operator(n, "+")
        jz = collective_operator(n, "z")
        eye = np.eye(n + 1)
        for loss_t in (0.0, 0.01, 0.1):
            loss = loss_t / t
            mom = lossy_moments_oracle(t, delta, gamma, loss, lam, n)
            state = evolved_css(n, t, delta, gamma, loss, lam)
            pairs = [
                (mom.jp, state.expectation(jp)),
                (mom.jp2, state.expectation(jp @ jp)),
                (mom.jz, state.expectation(jz)),
                (mom.jz2, state.expectation(jz @ jz)),
                (mom.jp_2jz1, state.expectation(jp @ (2.0 * jz + eye))),
            ]
            for got, want in pairs:
                dev = abs(complex(got) - complex(want)) / max(1.0, abs(complex(want)))
                worst = max(worst, dev)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5.0
    detail = f"worst mixed dev {worst:.2e} <= 1e-12, N in (2, 10, 40), {elapsed:.2f}s < 5s"
    report(capsys, 5, "closed-form lossy moments vs direct traces", ok, detail)
    assert ok, detail


def test_criterion_6_dual_route_kernel(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for eps in (-1.0, 0.0):
        p = make_params(epsilon_dd=eps, theta=1.0)
        for t in (1.0, 10.0, 100.0):
            a = delta_kernel(t, p)
            b = delta_kernel_spectral_route(t, p)
            worst = max(worst, abs(a / b - 1.0))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 30.0
    detail = f"worst rel gap {worst:.2e} <= 1e-6, t in (1, 10, 100), {elapsed:.1f}s < 30s"
    report(capsys, 6, "wavenumber vs frequency kernel routes", ok, detail)
    assert ok, detail


def test_criterion_7_kernel_and_squeezing_physics(base_params, base_table, capsys):
    t0 = time.perf_counter()
    checks = {}

    d200 = delta_kernel(200.0, base_params)
    d1000 = delta_kernel(1000.0, base_params)
    checks["plateau"] = abs(d1000 / d200 - 1.0) < 0.01

    tg = np.geomspace(5.0, 50.0, 12)
    checks["gamma_decreasing"] = bool(np.all(np.diff(
        [float(np.interp(t, base_table.times, base_table.gamma)) for t in tg]) < 0.0))

    minima = {}
    for eps in (-1.0, 0.0, 1.0):
        p = make_params(epsilon_dd=eps)
        tbl = (base_table if eps == -1.0 else
               build_kernel_table(p, base_table.times, include_plateau=False))
        minima[eps] = min_xi2_over_time(tbl, 100)
    checks["epsilon_ordering"] = minima[-1.0] < minima[0.0] < minima[1.0]

    lossy_minima = []
    for rel in (0.0, 0.002, 0.01):
        lossy_minima.append(min_xi2_over_time(
            base_table, 100, loss=rel * base_table.delta_inf))
    checks["loss_ordering"] = (lossy_minima[0] < lossy_minima[1] < lossy_minima[2])

    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 120.0
    detail = (f"plateau drift {abs(d1000 / d200 - 1.0):.2e} < 1%, "
              f"gamma decreasing: {checks['gamma_decreasing']}, "
              f"min xi2 {minima[-1.0]:.3f} < {minima[0.0]:.3f} < {minima[1.0]:.3f}, "
              f"lossy minima {', '.join(f'{v:.6f}' for v in lossy_minima)}, "
              f"{elapsed:.1f}s < 120s")
    report(capsys, 7, "kernel plateau and squeezing orderings", ok, detail)
    assert ok, detail


def test_criterion_8_qfi_scaling(base_table, capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, 51):
        val, _ = qfi_max(DickeState.coherent_plus_x(n))
        worst = max(worst, abs(val - n) / n)
    css_ok = worst <= 1e-10

    sizes = np.array([4, 8, 16, 32, 64])
    tsel = base_table.times[::4]
    peaks = []
    for n in sizes:
        best = 0.0
        for t in tsel:
            d, g = base_table.interpolate(float(t))
            val, _ = qfi_max(evolved_css(int(n), float(t), d, g))
            best = max(best, val)
        peaks.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(peaks), 1)[0])
    slope_ok = 1.85 <= slope <= 2.0

    elapsed = time.perf_counter() - t0
    ok = css_ok and slope_ok and elapsed < 120.0
    detail = (f"CSS worst rel dev {worst:.2e} <= 1e-10 for N <= 50, "
              f"peak-QFI exponent {slope:.3f} in [1.85, 2.0], {elapsed:.1f}s < 120s")
    report(capsys, 8, "shot-noise baseline and Heisenberg scaling", ok, detail)
    assert ok, detail


def test_criterion_9_magic_angle(capsys):
    phi = math.asin(math.sqrt(2.0 / 3.0))
    worst = max(abs(effective_epsilon_dd(eps, phi))
                for eps in (-1.0, -0.25, 0.37, 1.0, 1.1467))
    ok = worst <= 1e-12
    detail = f"worst |effective epsilon| {worst:.2e} <= 1e-12 at sin^2(tilt) = 2/3"
    report(capsys, 9, "magic-angle cancellation", ok, detail)
    assert ok, detail


def test_criterion_10_preset_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    mismatched = []
    for name in PRESET_NAMES:
        cfg = figure_preset(name)
        blobs = []
        for tag, threads in (("t1", 1), ("t8", 8)):
            clear_caches()
            paths = run_scenario(cfg, tmp_path / name / tag, threads=threads)
            blobs.append({key: open(p, "rb").read() for key, p in paths.items()})
        if blobs[0] != blobs[1]:
            mismatched.append(name)
    elapsed = time.perf_counter() - t0
    ok = not mismatched
    detail = (f"{len(PRESET_NAMES)} presets byte-identical across runs and "
              f"threads 1 vs 8, {elapsed:.0f}s"
              + (f"; mismatches: {mismatched}" if mismatched else ""))
    report(capsys, 10, "preset byte determinism", ok, detail)
    assert ok, detail
