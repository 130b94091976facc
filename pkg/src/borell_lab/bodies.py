"""Symmetric convex bodies described by support values on a direction grid.

A :class:`SupportBody` stores numbers ``h(u)`` for the directions ``u`` of a
:class:`DirectionGrid`.  The body it stands for is the halfspace
intersection ``{x : <x, u> <= h(u) for all grid u}``.  That set contains the
body whose support function interpolates ``h``, so every finite-grid volume
is biased upward.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from . import kernels
from .errors import ContractError, DegeneracyError, DimensionError, ValidationError
from .means import check_weight, mean

DEFAULT_PLANAR_M = 720
MEMBERSHIP_TOL = 1e-12
SYMMETRY_TOL = 1e-9

# Samples per Monte Carlo chunk; each chunk has its own seed so the estimate
# does not depend on how chunks are spread over workers.
MC_CHUNK = 1 << 16


class DirectionGrid:
    """Unit directions closed under negation; ``antipode[i]`` indexes ``-u_i``."""

    def __init__(self, directions, seed: int | None = None) -> None:
        directions = np.array(directions, dtype=float)
        if directions.ndim != 2 or directions.shape[1] < 2:
            raise DimensionError("directions must be an (m, dim) array with dim >= 2")
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValidationError("directions must be unit vectors")
        m = len(directions)
        if m % 2:
            raise ValidationError("a symmetric direction grid has an even number of directions")
        half = m // 2
        antipode = np.concatenate([np.arange(half, m), np.arange(0, half)])
        if not np.allclose(directions[antipode], -directions, atol=1e-12, rtol=0):
            raise ValidationError("grid must list u_0..u_{m/2-1} followed by their negations")
        directions.setflags(write=False)
        self.directions = directions
        self.antipode = antipode
        self.seed = seed

    @classmethod
    def planar(cls, m: int = DEFAULT_PLANAR_M) -> DirectionGrid:
        """The ``m`` equally spaced angles ``2 pi k / m`` (``m`` even)."""
        return _planar_grid(int(m))

    @classmethod
    def random(cls, dim: int, m: int, seed: int = 0) -> DirectionGrid:
        """``m/2`` seeded Gaussian directions plus their negations."""
        if dim < 2:
            raise DimensionError("dim must be >= 2")
        if m < 2 or m % 2:
            raise ValidationError("m must be a positive even number")
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((m // 2, dim))
        u /= np.linalg.norm(u, axis=1)[:, None]
        return cls(np.vstack([u, -u]), seed=seed)

    @classmethod
    def for_dim(cls, dim: int, m: int | None = None, seed: int = 0) -> DirectionGrid:
        if dim == 2:
            return cls.planar(m or DEFAULT_PLANAR_M)
        return cls.random(dim, m or 2000, seed)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    def matches(self, other: DirectionGrid) -> bool:
        return self is other or (
            self.directions.shape == other.directions.shape
            and np.array_equal(self.directions, other.directions)
        )

    def __repr__(self) -> str:
        return f"DirectionGrid(dim={self.dim}, m={self.m}, seed={self.seed})"


@lru_cache(maxsize=32)
def _planar_grid(m: int) -> DirectionGrid:
    if m < 4 or m % 2:
        raise ValidationError("planar grids need an even m >= 4")
    theta = 2.0 * np.pi * np.arange(m) / m
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # cos/sin of theta and theta + pi are not exact negatives in floating point
    half = m // 2
    dirs[half:] = -dirs[:half]
    return DirectionGrid(dirs)


class SupportBody:
    """Symmetric body given by positive support values on a direction grid."""

    def __init__(self, grid: DirectionGrid, values) -> None:
        values = np.array(values, dtype=float)
        if values.shape != (grid.m,):
            raise DimensionError(f"expected {grid.m} support values, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValidationError("support values must be finite and positive")
        mirrored = values[grid.antipode]
        if np.max(np.abs(values - mirrored)) > SYMMETRY_TOL * np.max(values):
            raise ValidationError("support values are not symmetric: h(u) != h(-u)")
        values = 0.5 * (values + mirrored)
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def polygon(self) -> Polygon2D:
        return wulff_polygon(self)

    @cached_property
    def half_widths(self) -> np.ndarray:
        """Largest ``|x_k|`` over the body, per axis (the box is symmetric)."""
        if self.dim == 2:
            return np.max(np.abs(self.polygon.vertices), axis=0)
        out = np.empty(self.dim)
        dirs = self.grid.directions
        for k in range(self.dim):
            c = np.zeros(self.dim)
            c[k] = -1.0
            res = linprog(c, A_ub=dirs, b_ub=self.values, bounds=[(None, None)] * self.dim, method="highs")
            if res.status != 0:
                raise DegeneracyError(f"unbounded or infeasible halfspace system: {res.message}")
            out[k] = -res.fun
        return out

    def volume(self, n_samples: int = 1_000_000, seed: int = 0) -> float:
        """Exact polygon area in the plane, Monte Carlo estimate otherwise."""
        if self.dim == 2:
            return polygon_area(self.polygon)
        return mc_volume(self, n_samples, seed)[0]

    def scaled(self, t: float) -> SupportBody:
        return SupportBody(self.grid, self.values * t)

    def __repr__(self) -> str:
        return f"SupportBody({self.grid!r})"


@dataclass(frozen=True)
class Polygon2D:
    """Convex polygon, vertices counterclockwise."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DegeneracyError("a polygon needs at least 3 planar vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = float(np.max(np.abs(v))) ** 2
        if np.any(cross < -1e-12 * max(scale, 1.0)):
            raise ValidationError("vertices are not in convex counterclockwise order")
        object.__setattr__(self, "vertices", v)


def polygon_area(P: Polygon2D) -> float:
    """Shoelace area."""
    x, y = P.vertices[:, 0], P.vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def support_of_polytope(vertices, grid: DirectionGrid) -> SupportBody:
    """Support values ``max_v <v, u>`` of a centrally symmetric vertex set."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != grid.dim:
        raise DimensionError(f"vertices must be (k, {grid.dim})")
    scale = max(float(np.max(np.abs(v))), 1.0)
    for p in v:
        if np.min(np.linalg.norm(v + p, axis=1)) > SYMMETRY_TOL * scale:
            raise ValidationError(f"vertex set is not symmetric: -{p.tolist()} missing")
    if np.linalg.matrix_rank(v, tol=1e-9 * scale) < grid.dim:
        raise ValidationError("vertex set has empty interior")
    return SupportBody(grid, np.max(v @ grid.directions.T, axis=0))


def p_combination(lam: float, p: float, K: SupportBody, L: SupportBody) -> SupportBody:
    """Halfspace bounds ``u -> M_p^lam(h_K(u), h_L(u))`` of the Wulff body ``(1-lam)K (+)_p lam L``.

    The result bounds halfspaces; it need not be the support function of the
    body it cuts out.
    """
    lam = check_weight(lam)
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"p must lie in [0, 1], got {p}")
    if not K.grid.matches(L.grid):
        raise DimensionError("bodies live on different direction grids")
    return SupportBody(K.grid, mean(p, lam, K.values, L.values))


def wulff_polygon(B: SupportBody) -> Polygon2D:
    """Intersect the halfplanes ``<x, u> <= h(u)`` (deque sweep over sorted angles)."""
    if B.dim != 2:
        raise DimensionError("wulff_polygon needs a planar body")
    return Polygon2D(halfplane_intersection(B.grid.directions, B.values))


def halfplane_intersection(normals, offsets) -> np.ndarray:
    """Vertices (counterclockwise) of ``{x : n_i . x <= c_i}``.

    The region must be bounded with non-empty interior; constraints with
    equal angle keep the smallest offset.
    """
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    ang = np.arctan2(normals[:, 1], normals[:, 0])
    order = np.lexsort((offsets, ang))
    nx, ny, c = normals[order, 0].tolist(), normals[order, 1].tolist(), offsets[order].tolist()
    ang_sorted = ang[order].tolist()
    eps = 1e-12 * max(1.0, max(abs(v) for v in c))

    lines = []
    for i in range(len(c)):
        if lines and abs(ang_sorted[i] - ang_sorted[lines[-1]]) < 1e-12:
            continue
        lines.append(i)

    def meet(i: int, j: int) -> tuple[float, float]:
        det = nx[i] * ny[j] - ny[i] * nx[j]
        if abs(det) < 1e-15:
            raise DegeneracyError("parallel constraints leave the region unbounded or empty")
        return ((c[i] * ny[j] - ny[i] * c[j]) / det, (nx[i] * c[j] - c[i] * nx[j]) / det)

    def violates(i: int, pt: tuple[float, float]) -> bool:
        return nx[i] * pt[0] + ny[i] * pt[1] > c[i] - eps

    dq: deque[int] = deque()
    for i in lines:
        while len(dq) >= 2 and violates(i, meet(dq[-1], dq[-2])):
            dq.pop()
        while len(dq) >= 2 and violates(i, meet(dq[0], dq[1])):
            dq.popleft()
        dq.append(i)
    while len(dq) >= 3 and violates(dq[0], meet(dq[-1], dq[-2])):
        dq.pop()
    while len(dq) >= 3 and violates(dq[-1], meet(dq[0], dq[1])):
        dq.popleft()
    if len(dq) < 3:
        raise DegeneracyError("halfplane intersection is empty or unbounded")
    q = list(dq)
    verts = np.array([meet(q[k], q[(k + 1) % len(q)]) for k in range(len(q))])
    keep = np.linalg.norm(verts - np.roll(verts, 1, axis=0), axis=1) > eps
    verts = verts[keep]
    if len(verts) < 3:
        raise DegeneracyError("halfplane intersection is lower-dimensional")
    for k in range(len(c)):
        if np.any(verts @ np.array([nx[k], ny[k]]) > c[k] + 1e-9 * max(1.0, abs(c[k]))):
            raise DegeneracyError("halfplane intersection is empty or unbounded")
    return verts


def membership(x, B: SupportBody) -> np.ndarray | bool:
    """``<x, u> <= h(u) + 1e-12`` for every grid direction (vectorized over rows)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != B.dim:
        raise DimensionError(f"points must have {B.dim} coordinates")
    inside = kernels.halfspace_inside(x.reshape(-1, B.dim), B.grid.directions, B.values, MEMBERSHIP_TOL)
    return bool(inside[0]) if x.ndim == 1 else inside


def mc_volume(B: SupportBody, n_samples: int, seed: int = 0, workers: int = 1) -> tuple[float, float]:
    """Hit-or-miss volume estimate in the body's bounding box.

    Returns ``(estimate, stderr)``.  The result depends only on
    ``(B, n_samples, seed)``, not on ``workers``.
    """
    if n_samples < 1000:
        raise ContractError("mc_volume needs at least 1000 samples")
    half = B.half_widths
    box_vol = float(np.prod(2.0 * half))
    sizes = [MC_CHUNK] * (n_samples // MC_CHUNK)
    if n_samples % MC_CHUNK:
        sizes.append(n_samples % MC_CHUNK)

    def run(k: int) -> int:
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        pts = rng.uniform(-half, half, size=(sizes[k], B.dim))
        return int(np.count_nonzero(kernels.halfspace_inside(pts, B.grid.directions, B.values, MEMBERSHIP_TOL)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run, range(len(sizes))))
    else:
        hits = sum(run(k) for k in range(len(sizes)))
    q = hits / n_samples
    return box_vol * q, box_vol * math.sqrt(q * (1.0 - q) / n_samples)


def random_symmetric_polygon(seed: int | Sequence[int], k: int = 6) -> np.ndarray:
    """Hull of ``k`` random points (radii in [0.5, 2]) and their negatives."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, k)
    r = rng.uniform(0.5, 2.0, k)
    pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    pts = np.vstack([pts, -pts])
    hull = ConvexHull(pts)
    return pts[hull.vertices]


def random_aligned_polygon(seed: int | Sequence[int], m: int = DEFAULT_PLANAR_M, k: int = 6) -> np.ndarray:
    """Symmetric polygon cut out by ``k`` random halfplane pairs with normals on the planar ``m``-grid.

    Offsets are uniform in [0.5, 2].  Every facet normal is a grid direction
    (also of every refinement ``2m, 4m, ...``), so the grid represents the
    polygon without superset bias.
    """
    if not 2 <= k <= m // 2:
        raise ContractError(f"need 2 <= k <= m/2, got k={k}, m={m}")
    rng = np.random.default_rng(seed)
    theta = 2.0 * np.pi * rng.choice(m // 2, size=k, replace=False) / m
    r = rng.uniform(0.5, 2.0, k)
    n = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return halfplane_intersection(np.vstack([n, -n]), np.concatenate([r, r]))


def regular_polygon(k: int, circumradius: float = 1.0, phase: float = 0.0) -> np.ndarray:
    t = phase + 2.0 * np.pi * np.arange(k) / k
    return circumradius * np.stack([np.cos(t), np.sin(t)], axis=1)


def box_body(half_widths: Sequence[float], grid: DirectionGrid) -> SupportBody:
    """The axis box ``prod [-a_k, a_k]``; its support function is ``sum a_k |u_k|``."""
    a = np.asarray(half_widths, dtype=float)
    return SupportBody(grid, np.abs(grid.directions) @ a)
