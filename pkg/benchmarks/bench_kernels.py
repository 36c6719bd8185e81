"""Time the numpy and numba implementations of each ulab kernel.

Usage: python benchmarks/bench_kernels.py [--repeat R] [--json out.json]

Every kernel pair gets identical inputs. The numba version is called once
before timing so compilation is excluded. Outputs are compared so a fast
but wrong kernel is reported rather than silently timed.
"""
import argparse
import itertools
import json
import timeit

import numpy as np

from ulab import kernels
from ulab.operators import haar_unitary


def _cases(rng):
    k = 200
    u = 1.0 - rng.random((20_000, k))
    yield "coupon_times", (u, k), {}

    draws = rng.integers(0, 16, (20_000, 120))
    yield "completion_times", (draws, 16), {}

    M = haar_unitary(12, 0).matrix
    combos = np.array(list(itertools.combinations(range(12), 3)), dtype=np.int64)
    rows = np.repeat(combos, len(combos), axis=0)
    cols = np.tile(combos, (len(combos), 1))
    yield "block_norms", (M, rows, cols), {}

    Phi = np.concatenate([np.eye(10), haar_unitary(10, 1).matrix], axis=1)
    subsets = np.array(list(itertools.combinations(range(20), 4)), dtype=np.int64)
    yield "gram_deviation", (Phi, subsets), {}

    A = haar_unitary(7, 2).matrix
    sub = np.array(list(itertools.combinations(range(7), 3)), dtype=np.int64)
    yield "submatrix_dets", (A, sub, sub), {}


def _dr_case(n=64):
    U = haar_unitary(n, 3).matrix
    Uh = np.ascontiguousarray(U.conj().T)
    v0 = np.zeros(2 * n, complex)
    v0[[2, n + 9]] = [1.0, -0.5j]
    b = v0[:n] + U @ v0[n:]
    tail = (b, 0.1 * np.linalg.norm(b) / np.sqrt(n), 50_000, 1e-9, 1e-9, 50, 1e-10)
    run_np = lambda: kernels.dr_basis_pursuit_numpy(lambda v: U @ v, lambda v: Uh @ v, *tail)
    run_nb = lambda: kernels.dr_basis_pursuit_numba(U, Uh, *tail)
    return run_np, run_nb


def _agree(a, b):
    a = a[0] if isinstance(a, tuple) else a
    b = b[0] if isinstance(b, tuple) else b
    return bool(np.allclose(a, b, atol=1e-8))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    rows = []
    runners = [(name, lambda f=getattr(kernels, name + "_numpy"), a=a: f(*a),
                lambda f=getattr(kernels, name + "_numba"), a=a: f(*a))
               for name, a, _ in _cases(rng)]
    runners.append(("dr_basis_pursuit", *_dr_case()))
    for name, run_np, run_nb in runners:
        out_nb = run_nb()  # compile
        out_np = run_np()
        t_np = min(timeit.repeat(run_np, number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(run_nb, number=1, repeat=args.repeat))
        rows.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb,
                     "speedup": t_np / t_nb, "agree": _agree(out_np, out_nb)})

    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree")
    for r in rows:
        print(f"{r['kernel']:<20}{1e3 * r['numpy_s']:>12.2f}{1e3 * r['numba_s']:>12.2f}"
              f"{r['speedup']:>10.1f}  {r['agree']}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
