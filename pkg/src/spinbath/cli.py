"""Command-line interface.

Subcommands:

  run CONFIG          execute a scenario file into an output directory
  preset NAME         execute a named reference sweep (fig2 ... fig6b)
  kernels             tabulate delta(t), gamma(t) for one reservoir
  spectral            tabulate the spectral density J(omega)
  stability           scan the Bogoliubov spectrum for imaginary modes

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure
(instability, divergent integral, no pi/2 crossing, ...).  ``stability``
exits 0 even for an unstable reservoir: reporting instability is its job.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .config import (
    PRESET_NAMES,
    ScenarioConfig,
    TimeGrid,
    canonical_text,
    config_sha256,
    figure_preset,
    load_config,
)
from .errors import ConfigError, SpinbathError
from .reservoir import (
    ReservoirParams,
    band_top,
    build_kernel_table,
    spectral_density_details,
    stability_scan,
)
from .runner import _write_csv, run_scenario


def _add_reservoir_flags(sub):
    sub.add_argument("--config", help="scenario file to take the reservoir from")
    sub.add_argument("--eta", type=float, help="interaction scale")
    sub.add_argument("--epsilon-dd", type=float, help="relative dipolar strength")
    sub.add_argument("--theta", type=float, help="coupling prefactor")
    sub.add_argument("--ell-ratio", type=float, default=1.0)
    sub.add_argument("--temperature", type=float, default=0.0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spinbath",
        description="dipolar-reservoir spin dephasing: kernels, evolution, metrology",
    )
    parser.add_argument("--version", action="version", version=f"spinbath {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="execute a scenario file")
    p_run.add_argument("config_path")
    p_run.add_argument("--out", default="spinbath_out", help="output directory")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--tol", type=float, help="override quadrature.abs_tol")

    p_pre = subs.add_parser("preset", help="execute a named reference sweep")
    p_pre.add_argument("name", choices=PRESET_NAMES, metavar="name",
                       help=f"one of: {', '.join(PRESET_NAMES)}")
    p_pre.add_argument("--out", default=None, help="output directory (default: ./<name>)")
    p_pre.add_argument("--threads", type=int, default=1)
    p_pre.add_argument("--tol", type=float, help="override quadrature.abs_tol")

    p_ker = subs.add_parser("kernels", help="tabulate the dephasing kernels")
    _add_reservoir_flags(p_ker)
    p_ker.add_argument("--t-min", type=float, default=1e-2)
    p_ker.add_argument("--t-max", type=float, default=1e3)
    p_ker.add_argument("--n-points", type=int, default=400)
    p_ker.add_argument("--spacing", choices=("log", "linear"), default="log")
    p_ker.add_argument("--tol", type=float, default=1e-10)
    p_ker.add_argument("--out", required=True, help="output CSV file")

    p_spec = subs.add_parser("spectral", help="tabulate the spectral density")
    _add_reservoir_flags(p_spec)
    p_spec.add_argument("--omega-min", type=float, default=1e-2)
    p_spec.add_argument("--omega-max", type=float, default=None,
                        help="default: just below the band top")
    p_spec.add_argument("--n-points", type=int, default=240)
    p_spec.add_argument("--out", required=True, help="output CSV file")

    p_st = subs.add_parser("stability", help="scan for imaginary Bogoliubov modes")
    _add_reservoir_flags(p_st)
    p_st.add_argument("--k-max", type=float, default=None)
    p_st.add_argument("--n-samples", type=int, default=2001)

    return parser


def _reservoir_from_args(args):
    if args.config is not None:
        return load_config(args.config).reservoir
    missing = [flag for flag, val in
               (("--eta", args.eta), ("--epsilon-dd", args.epsilon_dd),
                ("--theta", args.theta)) if val is None]
    if missing:
        raise ConfigError(
            f"give --config or all of --eta/--epsilon-dd/--theta (missing {missing})"
        )
    try:
        return ReservoirParams(
            eta=args.eta,
            epsilon_dd=args.epsilon_dd,
            theta=args.theta,
            ell_ratio=args.ell_ratio,
            temperature=args.temperature,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _provenance(reservoir, outputs, grid=None, tol=1e-10):
    cfg = ScenarioConfig(
        reservoir=reservoir,
        outputs=outputs,
        time_grid=grid if grid is not None else TimeGrid(),
        abs_tol=tol,
    )
    lines = [f"spinbath {__version__}", f"config sha256 {config_sha256(cfg)}"]
    lines += [line.rstrip("\n") for line in canonical_text(cfg).splitlines()]
    return lines


def _cmd_run(args):
    cfg = load_config(args.config_path)
    if args.tol is not None:
        from dataclasses import replace
        cfg = replace(cfg, abs_tol=args.tol)
    paths = run_scenario(cfg, args.out, threads=args.threads)
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def _cmd_preset(args):
    cfg = figure_preset(args.name)
    if args.tol is not None:
        from dataclasses import replace
        cfg = replace(cfg, abs_tol=args.tol)
    out = args.out if args.out is not None else args.name
    paths = run_scenario(cfg, out, threads=args.threads)
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def _cmd_kernels(args):
    reservoir = _reservoir_from_args(args)
    grid = TimeGrid(args.t_min, args.t_max, args.n_points, args.spacing)
    times = grid.build()
    table = build_kernel_table(reservoir, times, abs_tol=args.tol)
    header = _provenance(reservoir, ("kernels",), grid, args.tol)
    header.append(f"delta_inf {table.delta_inf:.12g}")
    rows = list(zip(table.times, table.delta, table.gamma))
    _write_csv(args.out, header, ("t", "delta", "gamma"), rows)
    print(f"kernels: {args.out}")
    return 0


def _cmd_spectral(args):
    reservoir = _reservoir_from_args(args)
    top = args.omega_max
    if top is None:
        top = band_top(reservoir) * (1.0 - 1e-9)
    grid = np.geomspace(args.omega_min, top, args.n_points)
    rows = []
    for omega in grid:
        point = spectral_density_details(float(omega), reservoir)
        rows.append((point.omega, point.value, point.branch_count))
    header = _provenance(reservoir, ("spectral_density",))
    _write_csv(args.out, header, ("omega", "J", "branch_count"), rows)
    print(f"spectral: {args.out}")
    return 0


def _cmd_stability(args):
    reservoir = _reservoir_from_args(args)
    report = stability_scan(reservoir, k_max=args.k_max, n_samples=args.n_samples)
    print(f"stable: {'yes' if report.stable else 'no'}")
    if not report.stable:
        print(f"k_unstable: {report.k_unstable:.8g}")
    print(f"radicand_min: {report.radicand_min:.12g} at k = {report.k_at_min:.12g}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "preset": _cmd_preset,
    "kernels": _cmd_kernels,
    "spectral": _cmd_spectral,
    "stability": _cmd_stability,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return 2
    except SpinbathError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
