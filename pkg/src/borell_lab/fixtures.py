"""Canonical test data: grid functions, bodies and Borell triples.

Also writes the demo scenario suite (``python -m borell_lab.fixtures DIR``).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .bodies import DirectionGrid, SupportBody, box_body, random_symmetric_polygon, regular_polygon, support_of_polytope
from .funcgrid import GridFunction
from .inequalities import sup_convolution_bbl, sup_convolution_nonlinear
from .transport import AffineMap, Combiner, CoordinateMap, MeanCombiner, MinkowskiCombiner


def gaussian_1d(center: float = 0.0, half: float = 7.0, n: int = 2001, width: float = 1.0) -> GridFunction:
    return GridFunction.from_function(lambda x: np.exp(-(((x - center) / width) ** 2)), [-half], [half], n)


def uniform_1d(a: float = 0.0, b: float = 1.0, n: int = 1001) -> GridFunction:
    """Unit-mass uniform density on ``[a, b]``."""
    return GridFunction.from_function(lambda x: np.full_like(x, 1.0 / (b - a)), [a], [b], n)


def linear_1d(n: int = 1001) -> GridFunction:
    """``2y`` on ``[0, 1]``; uniform on [0, 1] is carried to it by ``sqrt``."""
    return GridFunction.from_function(lambda y: 2.0 * y, [0.0], [1.0], n)


def gaussian_2d(center=(0.0, 0.0), half: float = 5.0, n: int = 201) -> GridFunction:
    cx, cy = center
    return GridFunction.from_function(lambda x, y: np.exp(-((x - cx) ** 2) - (y - cy) ** 2), [-half, -half], [half, half], n)


def pyramid(half: float = 2.5, per_unit: int = 128) -> GridFunction:
    """``max(0, 1 - max(|x|, |y|))``: concave on its support, so 1-concave.

    Nodes sit at multiples of ``1/per_unit``, so every density level is one
    of those multiples.  With ``per_unit = 128`` and 64 thresholds, the
    arithmetic means of two thresholds are density levels again.
    """
    n = int(round(2 * half * per_unit)) + 1
    return GridFunction.from_function(lambda x, y: np.maximum(0.0, 1.0 - np.maximum(np.abs(x), np.abs(y))), [-half, -half], [half, half], n)


def product_tent(half: float = 1.5, per_unit: int = 128) -> GridFunction:
    """``max(0, 1-|x|) max(0, 1-|y|)``: 1/2-concave but not 1-concave."""
    n = int(round(2 * half * per_unit)) + 1
    return GridFunction.from_function(
        lambda x, y: np.maximum(0.0, 1.0 - np.abs(x)) * np.maximum(0.0, 1.0 - np.abs(y)), [-half, -half], [half, half], n
    )


def square(a: float = 1.0, m: int = 720) -> SupportBody:
    return box_body([a, a], DirectionGrid.planar(m))


def rotated_square(circumradius: float = 1.2, m: int = 720) -> SupportBody:
    """Square with vertices on the axes."""
    return support_of_polytope(regular_polygon(4, circumradius), DirectionGrid.planar(m))


def random_polygon_pair(seed: int, m: int = 720, scale: float = 1.0) -> tuple[SupportBody, SupportBody]:
    grid = DirectionGrid.planar(m)
    return (
        support_of_polytope(scale * random_symmetric_polygon([seed, 0]), grid),
        support_of_polytope(scale * random_symmetric_polygon([seed, 1]), grid),
    )


@dataclass(frozen=True)
class BorellCase:
    """A triple ``(f, g, h)`` with the map and combiner it is tested against."""

    name: str
    f: GridFunction
    g: GridFunction
    h: GridFunction
    phi: CoordinateMap
    Phi: Combiner


def borell_cases() -> list[BorellCase]:
    """Fixture suite for the hypothesis/conclusion implication.

    Minimal sup-convolutions satisfy the hypothesis; scaled-down or shifted
    copies break it (and sometimes the conclusion too).
    """
    cases = []
    for lam in (0.25, 0.5):
        f, g = gaussian_1d(-1.0, n=801), gaussian_1d(1.5, n=801)
        h = sup_convolution_bbl(f, g, 0.0, lam)
        phi, Phi = CoordinateMap.affine(lam), MeanCombiner(0.0, lam)
        cases.append(BorellCase(f"gauss1d-pl-{lam}", f, g, h, phi, Phi))
        cases.append(BorellCase(f"gauss1d-pl-{lam}-shrunk", f, g, h.scaled(0.9), phi, Phi))
        cases.append(BorellCase(f"gauss1d-pl-{lam}-shifted", f, g, GridFunction(h.box_min + 0.5, h.box_max + 0.5, h.values), phi, Phi))
    # Closed-form midpoint Gaussian: a grid sup-convolution this coarse loses
    # more than the quadrature tolerance to lattice misalignment.
    f2, g2 = gaussian_2d((-0.5, 0.0), n=81), gaussian_2d((0.5, 0.5), n=81)
    h2 = gaussian_2d((0.0, 0.25), n=81)
    cases.append(BorellCase("gauss2d-pl", f2, g2, h2, CoordinateMap.affine(0.5, 2), MeanCombiner(0.0, 0.5)))
    cases.append(BorellCase("gauss2d-pl-shrunk", f2, g2, h2.scaled(0.8), CoordinateMap.affine(0.5, 2), MeanCombiner(0.0, 0.5)))
    one = uniform_1d(0.0, 1.0, 201)
    two = GridFunction.from_function(lambda x: np.ones_like(x), [0.0], [2.0], 401)
    add = CoordinateMap([AffineMap(1.0, 1.0)])
    cases.append(BorellCase("interval-sum", one, one, two, add, MinkowskiCombiner(1)))
    cases.append(BorellCase("interval-sum-short", one, one, GridFunction.from_function(lambda x: np.ones_like(x), [0.0], [1.5], 301), add, MinkowskiCombiner(1)))
    u = GridFunction.from_function(lambda x: np.ones_like(x), [1.0], [2.0], 201)
    hn = sup_convolution_nonlinear(u, u, [0.0], 0.0, 0.5)
    cases.append(BorellCase("powermean-uniform", u, u, hn, CoordinateMap.power_mean(0.0, 0.5), MeanCombiner(0.0, 0.5)))
    return cases


# demo scenario suite ------------------------------------------------------------


def _scenario(name: str, check: str, inputs: dict, parameters: dict, tolerance=None, seed: int = 0) -> dict:
    out = {"name": name, "check": check, "inputs": inputs, "parameters": parameters, "seed": seed}
    if tolerance is not None:
        out["tolerance"] = tolerance
    return out


def write_demo_suite(directory: str | Path) -> list[Path]:
    """Write the demo scenarios and their data files; returns the scenario paths."""
    root = Path(directory)
    data = root / "data"
    data.mkdir(parents=True, exist_ok=True)

    def grid(name: str, f: GridFunction) -> str:
        io.save_json(data / f"{name}.json", io.grid_to_dict(f))
        return f"data/{name}.json"

    def polygon(name: str, vertices) -> str:
        io.save_json(data / f"{name}.json", {"type": "polygon", "vertices": np.asarray(vertices).tolist()})
        return f"data/{name}.json"

    f_g = grid("gauss_left", gaussian_1d(-1.0, n=2001))
    g_g = grid("gauss_right", gaussian_1d(1.5, n=2001))
    gb_f = grid("gauss_small_left", gaussian_1d(-1.0, n=401))
    gb_g = grid("gauss_small_right", gaussian_1d(1.5, n=401))
    gb_h = grid("gauss_small_sup", sup_convolution_bbl(io.load_grid(root / gb_f), io.load_grid(root / gb_g), 0.0, 0.5))
    u01 = grid("uniform01", uniform_1d(0.0, 1.0, 2001))
    lin = grid("linear01", linear_1d(2001))
    ones12 = grid("ones12", GridFunction.from_function(lambda x: np.ones_like(x), [1.0], [2.0], 201))
    pyr = grid("pyramid", pyramid(half=1.25))
    sq = polygon("square", [[1, 1], [-1, 1], [-1, -1], [1, -1]])
    sq2 = polygon("square2", [[2, 2], [-2, 2], [-2, -2], [2, -2]])
    rot = polygon("rotated_square", regular_polygon(4, 1.2))
    pk = polygon("random_K", random_symmetric_polygon([7, 0]))
    pl = polygon("random_L", random_symmetric_polygon([7, 1]))

    scenarios = [
        _scenario("means-geometric", "means", {}, {"s": 0, "lambda": 0.5, "a": 4, "b": 9, "expected": 6}),
        _scenario("means-minimum", "means", {}, {"s": "-inf", "lambda": 0.3, "a": 2, "b": 5, "expected": 2}),
        _scenario("holder-basic", "holder", {}, {"alpha": 0.5, "beta": 1, "gamma": 1, "lambda": 0.3, "a": 1, "b": 4, "c": 2, "d": 0.5}),
        _scenario("bbl-gaussians", "bbl", {"f": f_g, "g": g_g}, {"gamma": 0, "lambda": 0.5}),
        _scenario("borell-gaussians", "borell", {"f": gb_f, "g": gb_g, "h": gb_h}, {"phi": "affine:lambda=0.5", "Phi": "mean:s=0,lambda=0.5", "pairs": 10000, "n_scale": 16}),
        _scenario("nonlinear-uniform", "nonlinear", {"f": ones12, "g": ones12}, {"p": [0], "gamma": 0, "lambda": 0.5}),
        _scenario("transport-sqrt", "transport", {"f": u01, "g": lin}, {}),
        _scenario("transport-certificate", "transport", {"f": u01, "g": lin}, {"phi": "affine:lambda=0.5", "Phi": "mean:s=-1,lambda=0.5"}),
        _scenario("logbm-dilate", "logbm", {"K": sq, "L": sq2}, {"lambda": 0.5}),
        _scenario("lpbm-random-polygons", "lpbm", {"K": pk, "L": pl}, {"lambda": 0.3, "p": 0.5}),
        _scenario("pipeline-pyramid", "pipeline", {"K": sq, "L": rot, "density": pyr}, {"lambda": 0.5, "p": 0.5, "alpha": 1, "thresholds": 64}),
        _scenario("inclusion-squares", "inclusion", {"K": sq, "L": rot}, {"lambda": 0.5, "p": 0, "points": 10000}),
        _scenario("sweep-logbm", "sweep", {}, {"trials": 20, "p": 0, "dim": 2}, seed=1),
    ]
    paths = []
    for sc in scenarios:
        path = root / f"{sc['name']}.json"
        io.save_json(path, sc, indent=2)
        paths.append(path)
    return paths


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit("usage: python -m borell_lab.fixtures DIR")
    for p in write_demo_suite(sys.argv[1]):
        print(p)
