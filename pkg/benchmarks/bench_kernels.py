"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Both paths are called explicitly through ``use_numba=``, so the result does
not depend on ``BORELL_LAB_DISABLE_NUMBA``.  Each row also checks that the
two paths return the same answer.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from borell_lab import _accel, kernels
from borell_lab.bodies import DirectionGrid


def _sup_case(n, dim):
    axis = np.linspace(-3, 3, n)
    mesh = np.stack(np.meshgrid(*[axis] * dim, indexing="ij"), axis=-1).reshape(-1, dim)
    fv = np.exp(-np.sum((mesh + 0.5) ** 2, axis=1))
    gv = np.exp(-np.sum((mesh - 0.5) ** 2, axis=1))
    shape = np.full(dim, n, dtype=np.int64)
    step = np.full(dim, axis[1] - axis[0])
    args = (mesh, fv, mesh, gv, np.ones(dim), 0.4, 0.0, np.full(dim, -3.0), step, shape)
    return f"sup_convolution {dim}-D, {len(mesh)}^2 pairs", lambda use: kernels.sup_convolution(*args, use_numba=use)


def _halfspace_case(n_points, m):
    grid = DirectionGrid.planar(m)
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, (n_points, 2))
    bounds = np.abs(grid.directions).sum(axis=1)
    return f"halfspace_inside {n_points} points x {m} dirs", lambda use: kernels.halfspace_inside(pts, grid.directions, bounds, use_numba=use)


def _mean_case(n):
    rng = np.random.default_rng(0)
    s, lam, a, b = rng.uniform(-5, 5, n), rng.uniform(0, 1, n), rng.uniform(0.1, 10, n), rng.uniform(0.1, 10, n)

    def run(use):
        fn = kernels._mean_scalar if use else kernels._mean_scalar.py_func
        return np.array([fn(s[i], lam[i], a[i], b[i]) for i in range(n)])

    return f"scalar mean x {n}", run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    k = 2 if args.quick else 1
    cases = [
        _sup_case(2001 // k, 1),
        _sup_case(61 // k, 2),
        _halfspace_case(10**6 // k, 720),
        _mean_case(10**5 // k),
    ]
    print(f"default backend: {_accel.backend()}")
    print(f"{'kernel':<44} {'numba s':>10} {'numpy s':>10} {'speedup':>8}  agree")
    for name, run in cases:
        fast, slow = run(True), run(False)  # first call compiles
        agree = np.array_equal(fast, slow) or np.allclose(fast, slow, rtol=1e-13, atol=0)
        t_numba = min(timeit.repeat(lambda: run(True), number=1, repeat=args.repeat))
        t_numpy = min(timeit.repeat(lambda: run(False), number=1, repeat=args.repeat))
        print(f"{name:<44} {t_numba:>10.4f} {t_numpy:>10.4f} {t_numpy / t_numba:>7.1f}x  {agree}")


if __name__ == "__main__":
    main()
