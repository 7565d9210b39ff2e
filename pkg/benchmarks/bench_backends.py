"""Compare the compiled extension against the pure-numpy fallback.

Two views of the same question:

* hot-path microbenchmarks calling both backend modules in-process on the
  batch sizes the adaptive quadrature actually uses (15 nodes x panel count);
* one end-to-end kernel-table build per backend, each in a subprocess with
  SPINBATH_BACKEND forced, since the backend is frozen at import time.

Run as ``python benchmarks/bench_backends.py``; no extra dependencies.
"""

import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from spinbath import _core_py as pure  # noqa: E402

try:
    from spinbath import _core as compiled
except ImportError:
    compiled = None

ETA, EPS, ELL_SQ = 5.0, -1.0, 1.0

TABLE_CODE = """\
import numpy as np, time
from spinbath import ReservoirParams, backend, build_kernel_table
p = ReservoirParams(eta=5.0, epsilon_dd=-1.0, theta=0.015, ell_ratio=1.0,
                    temperature=0.0)
t0 = time.perf_counter()
build_kernel_table(p, np.geomspace(0.01, 1000.0, 120))
print(f"{backend.backend_name()} {time.perf_counter() - t0:.3f}")
"""


def bench_case(label, func, repeat):
    best = min(timeit.repeat(func, number=1, repeat=repeat))
    print(f"  {label:<34s} {best * 1e3:9.3f} ms")
    return best


def microbench(sizes, repeat):
    rng = np.random.default_rng(7)
    for n in sizes:
        k = np.sort(rng.uniform(1e-4, 9.0, n))
        x = 0.5 * k * k
        print(f"batch size {n}:")
        cases = [
            ("exp_scaled_e1", lambda mod: mod.exp_scaled_e1(x)),
            ("dispersion", lambda mod: mod.dispersion(k, ETA, EPS)),
            ("kernel_integrands t=10",
             lambda mod: mod.kernel_integrands(k, 10.0, ETA, EPS, ELL_SQ, 0.0)),
            ("dinf_integrand",
             lambda mod: mod.dinf_integrand(k, ETA, EPS, ELL_SQ)),
        ]
        for label, call in cases:
            t_pure = bench_case(f"{label} [python]", lambda: call(pure), repeat)
            if compiled is not None:
                t_comp = bench_case(f"{label} [compiled]", lambda: call(compiled),
                                    repeat)
                print(f"  {'':<34s} speedup {t_pure / t_comp:6.1f}x")
        print()


def table_bench():
    print("full kernel-table build (120 log-spaced times, subprocess each):")
    for name in ("python", "compiled") if compiled is not None else ("python",):
        env = dict(os.environ, SPINBATH_BACKEND=name)
        out = subprocess.run([sys.executable, "-c", TABLE_CODE], env=env,
                             capture_output=True, text=True)
        if out.returncode != 0:
            print(f"  {name}: failed\n{out.stderr}")
            continue
        used, seconds = out.stdout.split()
        print(f"  {used:<10s} {float(seconds):7.3f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[15, 240, 4096])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--skip-table", action="store_true",
                    help="microbenchmarks only")
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not importable; timing the fallback only\n")
    microbench(args.sizes, args.repeat)
    if not args.skip_table:
        table_bench()


if __name__ == "__main__":
    main()
