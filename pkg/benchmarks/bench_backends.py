"""Compare the compiled and numpy tape backends.

    python benchmarks/bench_backends.py [--repeat 5] [--threads 1]

Times second-order jet sweeps over square grids, the value-only path,
and a full potential reconstruction (which spends most of its time in
field evaluation), then checks that the two backends agree.
"""

import argparse
import time

import numpy as np

from monocert import kernels
from monocert.certify import reconstruct_potential
from monocert.counterexample import make_pair, random_admissible_u
from monocert.expr import compile_tape, parse
from monocert.fields import F_PLUS_EXPR, DEFAULT_REGION, GridSpec


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    kernels.set_threads(args.threads)

    if "cython" not in kernels.BACKENDS:
        print("compiled kernel not built; only the numpy backend is available")
        return

    u_text = random_admissible_u(0)
    tapes = {"f_plus": compile_tape(parse(F_PLUS_EXPR)),
             "random u": compile_tape(parse(u_text))}
    print(f"threads={args.threads}  repeat={args.repeat} (best time shown)\n")
    print(f"{'workload':<34}{'cython [s]':>12}{'numpy [s]':>12}{'speed-up':>10}")

    for n in (129, 513, 1025):
        xs, ys = GridSpec(n, n).points(DEFAULT_REGION)
        for name, tape in tapes.items():
            for order in (2, 0):
                t = {b: best_of(lambda b=b: kernels.eval_tape(tape, xs, ys, order, backend=b),
                                args.repeat) for b in ("cython", "numpy")}
                label = f"{name} {'jets' if order else 'values'} {n}x{n}"
                print(f"{label:<34}{t['cython']:>12.4f}{t['numpy']:>12.4f}"
                      f"{t['numpy'] / t['cython']:>9.1f}x")

    pair = make_pair(u_text)
    total = pair.total
    timings = {}
    for b in ("cython", "numpy"):
        kernels.BACKEND = b
        timings[b] = best_of(lambda: reconstruct_potential(total), max(1, args.repeat // 2))
    print(f"{'reconstruct_potential 129x129':<34}{timings['cython']:>12.4f}"
          f"{timings['numpy']:>12.4f}{timings['numpy'] / timings['cython']:>9.1f}x")

    xs, ys = GridSpec(257, 257).points(DEFAULT_REGION)
    a = np.array(kernels.eval_tape(tapes["random u"], xs, ys, backend="cython"))
    b = np.array(kernels.eval_tape(tapes["random u"], xs, ys, backend="numpy"))
    print(f"\nmax backend difference (scaled): "
          f"{np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))):.3g}")


if __name__ == "__main__":
    main()
