"""Batch execution: sweeps, kernel tables, metrology rows, CSV products.

A scenario resolves into one task per sweep value; each task owns a reservoir,
a loss rate, and a list of atom numbers.  Kernel tables are built first (they
are the expensive part and are cached per reservoir), then the per-row
metrology work is fanned out over a thread pool.  Rows are written strictly in
(sweep, n_atoms, t) order after all results are in, so output bytes do not
depend on the thread count.

File layout per run directory:

  metrology.csv         time series, one row per (sweep value, N, t)
  qfi_summary.csv       per (sweep value, N): peak QFI and plateau diagnostics
  fidelity_at_topt.csv  per (sweep value, N): cat fidelity at t_opt
  kernels[_tag].csv     per sweep value: t, delta, gamma
  spectral[_tag].csv    per sweep value: omega, J, branch_count

Every file starts with provenance comments: package version and the sha256 of
the canonical config text.  No timestamps, by design: reruns must be
byte-identical.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import canonical_text, config_sha256
from .errors import MeanSpinError, QuadratureError
from .metrology import (
    cat_fidelity,
    optimal_time,
    qfi_max,
    qfi_n2_analytic,
    squeezing_parameter,
)
from .reservoir import band_top, build_kernel_table, spectral_density_details
from .spin_dynamics import DickeState, EvolutionInputs, evolve

_REFINE_POINTS = 33
_SPECTRAL_POINTS = 240


@dataclass(frozen=True)
class QfiSummary:
    """Peak statistics of one QFI time series.

    f_max is the grid maximum; f_max_refined adds a local quadratic-fit
    correction (an upper estimate of the true peak).  The plateau fields
    describe the longest stretch where the series stays within 15% of N^2/2,
    nan when no such stretch of at least five grid points exists.
    """

    n_atoms: int
    f_max: float
    t_at_max: float
    f_max_refined: float
    f_over_n: float
    f_over_n_sq: float
    plateau_level: float
    plateau_t_lo: float
    plateau_t_hi: float


def qfi_amplification_summary(times, values, n_atoms):
    """Summarize a QFI-vs-time series; see QfiSummary."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    i = int(np.argmax(values))
    f_max = float(values[i])
    refined = f_max
    if 0 < i < values.size - 1:
        x0, x1, x2 = times[i - 1], times[i], times[i + 1]
        y0, y1, y2 = values[i - 1], values[i], values[i + 1]
        d01 = (y1 - y0) / (x1 - x0)
        d12 = (y2 - y1) / (x2 - x1)
        curv = (d12 - d01) / (x2 - x0)
        if curv < 0.0:
            apex = 0.5 * (x0 + x1 - d01 / curv)
            refined = float(y0 + d01 * (apex - x0) + curv * (apex - x0) * (apex - x1))
            refined = max(refined, f_max)
    target = 0.5 * n_atoms * n_atoms
    near = np.abs(values / target - 1.0) <= 0.15
    best_len, best_lo, best_hi = 0, -1, -1
    run_start = None
    for idx, flag in enumerate(np.append(near, False)):
        if flag and run_start is None:
            run_start = idx
        elif not flag and run_start is not None:
            if idx - run_start > best_len:
                best_len, best_lo, best_hi = idx - run_start, run_start, idx - 1
            run_start = None
    if best_len >= 5:
        level = float(values[best_lo:best_hi + 1].mean())
        t_lo, t_hi = float(times[best_lo]), float(times[best_hi])
    else:
        level = t_lo = t_hi = math.nan
    return QfiSummary(
        n_atoms=n_atoms,
        f_max=f_max,
        t_at_max=float(times[i]),
        f_max_refined=refined,
        f_over_n=f_max / n_atoms,
        f_over_n_sq=f_max / (n_atoms * n_atoms),
        plateau_level=level,
        plateau_t_lo=t_lo,
        plateau_t_hi=t_hi,
    )


@dataclass(frozen=True)
class _Task:
    """One sweep value, fully resolved."""

    index: int
    sweep_value: float  # None when the scenario has no sweep
    reservoir: object
    n_list: tuple
    gamma_loss_rel: float


def _resolve_tasks(cfg):
    if cfg.sweep_parameter is None:
        return [_Task(0, None, cfg.reservoir, cfg.n_atoms, cfg.gamma_loss_rel)]
    tasks = []
    for i, value in enumerate(cfg.sweep_values):
        reservoir = cfg.reservoir
        n_list = cfg.n_atoms
        loss_rel = cfg.gamma_loss_rel
        if cfg.sweep_parameter == "n_atoms":
            n_list = (int(value),)
        elif cfg.sweep_parameter == "gamma_loss_rel":
            loss_rel = float(value)
        else:
            reservoir = replace(cfg.reservoir, **{cfg.sweep_parameter: float(value)})
        tasks.append(_Task(i, float(value), reservoir, n_list, loss_rel))
    return tasks


def _loss_rate(cfg, task, table):
    if cfg.gamma_loss_abs is not None:
        return cfg.gamma_loss_abs
    if task.gamma_loss_rel == 0.0:
        return 0.0
    if not math.isfinite(table.delta_inf):
        raise QuadratureError(
            "gamma_loss_rel needs the kernel plateau, which diverges for "
            f"epsilon_dd = {task.reservoir.epsilon_dd:g}; give gamma_loss_abs instead"
        )
    return task.gamma_loss_rel * table.delta_inf


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.12g}"


def _write_csv(path, header_lines, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _sweep_tag(cfg, task):
    if cfg.sweep_parameter is None:
        return ""
    return f"_{cfg.sweep_parameter}_{task.sweep_value:g}"


def _metrology_row(table, n, t, gamma_abs, lambda_bare, wants):
    """One (N, t) metrology row; returns the trailing columns of the CSV."""
    d, g = table.interpolate(t)
    lam = lambda_bare - n * d
    state = evolve(
        DickeState.coherent_plus_x(n),
        EvolutionInputs(time=t, delta=d, gamma=g, gamma_loss=gamma_abs,
                        lambda_prime=lam),
    )
    trace = state.trace
    normalized = state.normalized()
    xi2 = phi_opt = math.nan
    if "xi2" in wants:
        try:
            sq = squeezing_parameter(normalized)
            xi2, phi_opt = sq.xi2, sq.phi_opt
        except MeanSpinError:
            pass
    fq = nx = ny = nz = math.nan
    if "qfi" in wants:
        fq, direction = qfi_max(normalized)
        nx, ny, nz = (float(c) for c in direction)
    fid = math.nan
    if "fidelity" in wants:
        fid = cat_fidelity(state)
    fq_n2 = math.nan
    if n == 2 and gamma_abs == 0.0:
        fq_n2 = qfi_n2_analytic(t, d, g)[2]
    return (xi2, phi_opt, fq, nx, ny, nz, fid, trace, fq_n2)


def run_scenario(cfg, out_dir, threads=1):
    """Execute a scenario; returns {product name: path}.

    ``threads`` parallelizes over independent work items (kernel tables, then
    metrology rows); results are identical for any thread count.
    """
    os.makedirs(out_dir, exist_ok=True)
    tasks = _resolve_tasks(cfg)
    wants = set(cfg.outputs)
    need_series = bool(wants & {"xi2", "qfi"})
    need_topt = "fidelity" in wants
    base_times = cfg.time_grid.build()
    header = [
        f"spinbath {__version__}",
        f"config sha256 {config_sha256(cfg)}",
    ]
    header += [line.rstrip("\n") for line in canonical_text(cfg).splitlines()]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        def build_table(task):
            table = build_kernel_table(
                task.reservoir, base_times, cfg.abs_tol, cfg.k_max_sigma
            )
            t_opt = math.nan
            if need_topt:
                t_opt = optimal_time(table)
                lo, hi = 0.9 * t_opt, 1.1 * t_opt
                refine = build_kernel_table(
                    task.reservoir,
                    np.linspace(lo, hi, _REFINE_POINTS),
                    cfg.abs_tol,
                    cfg.k_max_sigma,
                )
                table = table.merged_with(refine)
                t_opt = optimal_time(table)
            return table, t_opt

        tables = list(pool.map(build_table, tasks))

        results = {}
        paths = {}

        if need_series or need_topt:
            for task, (table, _) in zip(tasks, tables):
                _loss_rate(cfg, task, table)  # fail fast before spawning rows

        if need_series:
            jobs = []
            for task, (table, _) in zip(tasks, tables):
                gamma_abs = _loss_rate(cfg, task, tables[task.index][0])
                for n in task.n_list:
                    for t in base_times:
                        jobs.append((task, table, n, float(t), gamma_abs))
            row_wants = wants & {"xi2", "qfi", "fidelity"}

            def run_job(job):
                task, table, n, t, gamma_abs = job
                return _metrology_row(
                    table, n, t, gamma_abs, cfg.lambda_prime, row_wants
                )

            rows = list(pool.map(run_job, jobs))
            out_rows = []
            for (task, _, n, t, _), tail in zip(jobs, rows):
                out_rows.append((task.sweep_value, n, t) + tail)
            columns = ("sweep_value", "n_atoms", "t", "xi2", "phi_opt", "fq_max",
                       "nx", "ny", "nz", "fidelity", "trace", "fq_n2_analytic")
            path = os.path.join(out_dir, "metrology.csv")
            _write_csv(path, header, columns, out_rows)
            paths["metrology"] = path
            results["series"] = (jobs, rows)

        if "qfi" in wants:
            summary_rows = []
            jobs, rows = results["series"]
            for task in tasks:
                for n in task.n_list:
                    series = [
                        (job[3], tail[2])
                        for job, tail in zip(jobs, rows)
                        if job[0] is task and job[2] == n
                    ]
                    times = np.array([s[0] for s in series])
                    values = np.array([s[1] for s in series])
                    summ = qfi_amplification_summary(times, values, n)
                    summary_rows.append((
                        task.sweep_value, n, summ.f_max, summ.t_at_max,
                        summ.f_max_refined, summ.f_over_n, summ.f_over_n_sq,
                        summ.plateau_level, summ.plateau_t_lo, summ.plateau_t_hi,
                    ))
            columns = ("sweep_value", "n_atoms", "f_max", "t_at_max",
                       "f_max_refined", "f_over_n", "f_over_n_sq",
                       "plateau_level", "plateau_t_lo", "plateau_t_hi")
            path = os.path.join(out_dir, "qfi_summary.csv")
            _write_csv(path, header, columns, summary_rows)
            paths["qfi_summary"] = path

        if need_topt:
            fid_jobs = []
            for task, (table, t_opt) in zip(tasks, tables):
                gamma_abs = _loss_rate(cfg, task, table)
                for n in task.n_list:
                    fid_jobs.append((task, table, n, t_opt, gamma_abs))

            def run_fid(job):
                task, table, n, t_opt, gamma_abs = job
                tail = _metrology_row(
                    table, n, t_opt, gamma_abs, cfg.lambda_prime, {"fidelity"}
                )
                return tail[6], tail[7]

            fids = list(pool.map(run_fid, fid_jobs))
            fid_rows = [
                (task.sweep_value, n, t_opt, fid, trace)
                for (task, _, n, t_opt, _), (fid, trace) in zip(fid_jobs, fids)
            ]
            columns = ("sweep_value", "n_atoms", "t_opt", "fidelity", "trace")
            path = os.path.join(out_dir, "fidelity_at_topt.csv")
            _write_csv(path, header, columns, fid_rows)
            paths["fidelity_at_topt"] = path

        if "kernels" in wants:
            for task, (table, _) in zip(tasks, tables):
                tag = _sweep_tag(cfg, task)
                rows = [
                    (t, d, g)
                    for t, d, g in zip(base_times, *_on_base_grid(table, base_times))
                ]
                extra = [f"delta_inf {_fmt(table.delta_inf)}"]
                if cfg.sweep_parameter is not None:
                    extra.append(f"sweep_value {_fmt(task.sweep_value)}")
                path = os.path.join(out_dir, f"kernels{tag}.csv")
                _write_csv(path, header + extra, ("t", "delta", "gamma"), rows)
                paths[f"kernels{tag}"] = path

        if "spectral_density" in wants:
            def spectral_rows(task):
                top = band_top(task.reservoir, cfg.k_max_sigma) * (1.0 - 1e-9)
                grid = np.geomspace(1e-2, top, _SPECTRAL_POINTS)
                out = []
                for omega in grid:
                    point = spectral_density_details(
                        float(omega), task.reservoir, cfg.k_max_sigma
                    )
                    out.append((point.omega, point.value, point.branch_count))
                return out

            all_rows = list(pool.map(spectral_rows, tasks))
            for task, rows in zip(tasks, all_rows):
                tag = _sweep_tag(cfg, task)
                extra = []
                if cfg.sweep_parameter is not None:
                    extra.append(f"sweep_value {_fmt(task.sweep_value)}")
                path = os.path.join(out_dir, f"spectral{tag}.csv")
                _write_csv(path, header + extra, ("omega", "J", "branch_count"), rows)
                paths[f"spectral{tag}"] = path

    return paths


def _on_base_grid(table, base_times):
    """Kernel values on the configured grid (drops refinement points)."""
    d, g = table.interpolate(base_times)
    return d, g
