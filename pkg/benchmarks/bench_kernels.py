"""Compare the numba and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--trials 10000] [--steps 10] [--repeat 5]

Kernel timings call both implementations directly in one process. The
end-to-end timing runs the headline scenario in a subprocess per backend,
switching with TOKENCYCLE_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from tokencycle import _kernels as K

ROOT = Path(__file__).resolve().parent.parent


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_inputs(n, m, rng):
    t = np.linspace(0.0, 1.0, m)
    return dict(
        adoption=1.0 - np.exp(-0.3 * t),
        efficiency=0.4 + 0.02 * t,
        eff_clamped=np.zeros(m, dtype=np.bool_),
        market_tv=np.ones(m),
        social=np.ones(m),
        subsidy=np.full(m, 1500.0),
        waste=10000.0 * np.exp(0.02 * rng.standard_normal((n, m)).cumsum(axis=1)),
        p_max=rng.uniform(0.2, 1.0, n),
        base_cost=rng.normal(4000.0, 80.0, n),
        carbon_price=rng.normal(1.5, 0.075, n),
        tv_override=rng.lognormal(0.0, 0.08, n),
        alpha_fin=0.6, alpha_soc=0.4, unit_cost=1.2, env_alpha=0.5, q=1.0, how=K.TERMINAL,
    )


def run_scenario(disable_numba, trials):
    env = dict(os.environ)
    if disable_numba:
        env["TOKENCYCLE_DISABLE_NUMBA"] = "1"
    else:
        env.pop("TOKENCYCLE_DISABLE_NUMBA", None)
    code = (
        "import time; from tokencycle import _kernels; _kernels.warmup();"
        "from tokencycle.scenario import load_scenario; from tokencycle.montecarlo import run_monte_carlo;"
        f"sc = load_scenario({str(ROOT / 'scenarios' / 'headline.scenario')!r}).body;"
        f"t0 = time.perf_counter(); run_monte_carlo(sc, {trials}, 0, 1);"
        "print(_kernels.BACKEND, time.perf_counter() - t0)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--steps", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not hasattr(K, "trajectory_batch_numba"):
        sys.exit("numba backend unavailable; nothing to compare")

    rng = np.random.default_rng(0)
    n, m = args.trials, args.steps + 1
    kw = kernel_inputs(n, m, rng)
    z = rng.standard_normal((n, args.steps))
    values = rng.normal(size=n)
    edges = np.linspace(values.min(), values.max(), 51)

    cases = [
        ("gbm_paths", lambda f: f(10000.0, 0.0298, 0.0632, z), K.gbm_paths_numpy, K.gbm_paths_numba),
        ("trajectory_batch", lambda f: f(**kw), K.trajectory_batch_numpy, K.trajectory_batch_numba),
        ("histogram_counts", lambda f: f(values, edges), K.histogram_counts_numpy, K.histogram_counts_numba),
    ]
    print(f"kernels: n={n} grid points={m}, best of {args.repeat}")
    print(f"  {'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, call, f_np, f_nb in cases:
        call(f_nb)  # compile outside the timed region
        t_np = best_of(lambda: call(f_np), args.repeat)
        t_nb = best_of(lambda: call(f_nb), args.repeat)
        print(f"  {name:<18}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.2f}")

    print(f"end to end: headline scenario, {args.trials} trials, 1 worker")
    for disable in (True, False):
        backend, seconds = run_scenario(disable, args.trials)
        print(f"  {backend:<8}{seconds:>8.3f} s")


if __name__ == "__main__":
    main()
