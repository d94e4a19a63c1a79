"""Wall-clock comparison of the python and compiled kernel backends.

Usage: python benchmarks/bench_kernels.py [--clients 48] [--repeat 5]
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from helpers import random_rows  # noqa: E402
from phfl import kernels  # noqa: E402


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--clients", type=int, default=48)
    ap.add_argument("--iterations", type=int, default=50, help="SCA iterations per solve")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rows = random_rows(np.random.default_rng(args.seed), args.clients)
    backends = {"python": kernels.get_backend("python")}
    try:
        backends["compiled"] = kernels.get_backend("compiled")
    except (ImportError, ValueError):
        print("compiled backend unavailable; timing python only")

    cases = {
        "objective_many": lambda k, x: k.objective_many(rows, x),
        "linearize_many": lambda k, x: k.linearize_many(rows, x),
        "sca_step_many": lambda k, x: k.sca_step_many(rows, x, k.initial_tau_many(rows, x)),
        "sca_solve_many": lambda k, x: k.sca_solve_many(rows, args.iterations, 0.0),
    }
    _, x0 = backends["python"].initial_anchor_many(rows)
    print(f"{args.clients} clients, best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for case, fn in cases.items():
        t = {name: best_of(lambda: fn(k, x0), args.repeat) for name, k in backends.items()}
        line = f"{case:<18}" + "".join(f"{1e3 * v:>12.3f}ms" for v in t.values())
        if "compiled" in t:
            line += f"{t['python'] / t['compiled']:>9.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
