"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json results.json]

Times the Euler loop (Example 1 in metric mode, Example 2 with its default
step) and the Jacobi eigensolver on both backends, checks that the two
produce the same answer, and prints per-iteration cost and speedup.
"""
import argparse
import json
import time

import numpy as np

from pdflow import (HAVE_COMPILED, DynamicsParams, certify_strong_monotonicity, choose_k,
                    default_alpha, euler_solve, make_l2_least_squares, make_random_qp)
from pdflow.linalg import jacobi_eigh


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def euler_case(name, program, k_mult, iters, python_iters):
    spec = choose_k(program, k_mult)
    alpha = default_alpha(certify_strong_monotonicity(program, spec))

    def run(backend, n):
        params = DynamicsParams(alpha=alpha, mode="metric", max_iters=n, stop_tol=1e-300)
        return lambda: euler_solve(program, params, spec=spec, record=False, backend=backend)

    return name, run, iters, python_iters


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the results table here")
    args = ap.parse_args(argv)
    if not HAVE_COMPILED:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rows = []
    cases = [
        euler_case("euler example1 (n=10, m=5)", make_random_qp(1, 10, 5), 1.0, 200_000, 20_000),
        euler_case("euler example2 (n=50, m=30)", make_l2_least_squares(7, 30, 50), 1000.0, 50_000, 5_000),
    ]
    for name, run, n_c, n_p in cases:
        t_c, r_c = best_of(run("compiled", n_c), args.repeat)
        t_p, r_p = best_of(run("python", n_p), args.repeat)
        # same number of steps for the agreement check
        same = run("compiled", n_p)()
        agree = float(np.max(np.abs(same.final_point.z - r_p.final_point.z)))
        rows.append({"case": name, "compiled_us_per_iter": 1e6 * t_c / n_c,
                     "python_us_per_iter": 1e6 * t_p / n_p, "max_abs_diff": agree})

    for N in (20, 80):
        rng = np.random.default_rng(N)
        B = rng.standard_normal((N, N))
        S = B + B.T
        t_c, w_c = best_of(lambda: jacobi_eigh(S, backend="compiled"), args.repeat)
        t_p, w_p = best_of(lambda: jacobi_eigh(S, backend="python"), args.repeat)
        rows.append({"case": f"jacobi {N}x{N}", "compiled_us_per_iter": 1e6 * t_c,
                     "python_us_per_iter": 1e6 * t_p, "max_abs_diff": float(np.max(np.abs(w_c - w_p)))})

    print(f"{'case':32s} {'compiled us':>12s} {'python us':>12s} {'speedup':>8s} {'max diff':>10s}")
    for r in rows:
        r["speedup"] = r["python_us_per_iter"] / r["compiled_us_per_iter"]
        print(f"{r['case']:32s} {r['compiled_us_per_iter']:12.3f} {r['python_us_per_iter']:12.3f} "
              f"{r['speedup']:8.1f} {r['max_abs_diff']:10.2e}")
    print("(euler rows are per iteration, jacobi rows per full decomposition)")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
