"""Compare the compiled and numpy kernels on representative inputs.

    python3 benchmarks/bench_kernels.py [--n 1025] [--repeat 3]
"""
import argparse
import time

import numpy as np

from vlebesgue import kernels
from vlebesgue.gridfn import Bump, CharFun, grid_for, sample
from vlebesgue.sio import cell_integrals_abs


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1025, help="mesh points for the PV and maximal kernels")
    ap.add_argument("--sharp-n", type=int, default=65, help="mesh points for the sharp kernel")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    e = CharFun(-1.0, 1.0) + Bump(0.5, 1.0)
    g = grid_for([e], L=16.0, n=args.n, depth=8, grade_breaks=True)
    f = sample(e, g)
    targets = np.concatenate((g.nodes, g.points))
    cum = np.concatenate(([0.0], np.cumsum(cell_integrals_abs(f))))

    gs = grid_for([e], L=4.0, n=args.sharp_n, depth=0, order=4)
    fs = sample(e, gs)
    w = gs.weights
    re, im = fs.qvalues.real.copy(), fs.qvalues.imag.copy()

    cases = {
        "pv_apply": lambda b: kernels.pv_apply(targets, g.cell_a, g.cell_b, g.ref_x, g.ref_w,
                                               f.qvalues, 8.0, backend=b),
        "maximal_sweep": lambda b: kernels.maximal_sweep(cum, g.nodes, backend=b),
        "sharp_intervals": lambda b: kernels.sharp_intervals(re, im, w, gs.n_cells, gs.order,
                                                             0.5, 0.25, backend=b),
    }
    backends = kernels.available()
    print(f"threads={kernels.n_threads()} mesh={len(g.nodes)} sharp_mesh={len(gs.nodes)}")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        t = {b: best_of(lambda: fn(b), args.repeat) for b in backends}
        sp = t["numpy"] / t["cython"] if "cython" in t else float("nan")
        print(f"{name:<16}" + "".join(f"{t[b]:>11.4f}s" for b in backends) + f"{sp:>9.1f}x")


if __name__ == "__main__":
    main()
