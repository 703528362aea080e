"""Compiled vs numpy interpolation kernels.

    python benchmarks/bench_kernels.py [--rows 100000] [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` time of each backend,
the speedup and the max absolute difference between the two outputs.
"""
import argparse
import timeit

import numpy as np

from rnss import _kernels_py

try:
    from rnss import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(rows: int, rng: np.random.Generator):
    points = np.linspace(0.5, 2.0, 11)
    t = 5
    witness = np.stack([rng.choice(points, t, replace=False) for _ in range(rows)])
    ys = rng.normal(0.0, 30.0, (rows, t))
    secrets = rng.normal(0.0, 10.0, rows)
    nodes = np.concatenate([[0.0], points[:t]])
    values = rng.normal(size=(t + 1, 1000))
    return {
        "share_eval": lambda k: k.share_eval(secrets, witness, ys, points),
        "basis_matrix": lambda k: k.basis_matrix(nodes, np.linspace(0.1, 3.0, 2000)),
        "interp_eval": lambda k: k.interp_eval(points[:t + 1], values, 0.0),
        "bary_weights": lambda k: k.bary_weights(points),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled extension not available; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'cython s':>12}{'numpy s':>12}{'speedup':>9}{'max |diff|':>12}")
    for name, fn in cases(args.rows, rng).items():
        number = 1 if name == "share_eval" else 1000
        fast = min(timeit.repeat(lambda: fn(_kernels), number=number, repeat=args.repeat)) / number
        slow = min(timeit.repeat(lambda: fn(_kernels_py), number=number, repeat=args.repeat)) / number
        diff = float(np.max(np.abs(np.asarray(fn(_kernels)) - np.asarray(fn(_kernels_py)))))
        print(f"{name:<14}{fast:>12.3e}{slow:>12.3e}{slow / fast:>9.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
