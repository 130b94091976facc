"""Non-negative functions sampled on uniform box grids."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from functools import cached_property

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ValidationError, ZeroFunctionError
from .means import mean
from .report import CheckReport

# Relative floor below which a sample counts as outside the support.
SUPPORT_EPS = 1e-12


class GridFunction:
    """A non-negative function sampled at the nodes of a uniform box grid.

    Node ``i`` along an axis sits at ``box_min + i * step``.  Each node owns
    the cell reaching halfway to its neighbours, so boundary nodes own half
    cells.  Integration therefore uses trapezoid weights, which keeps
    constants and affine functions exact.
    """

    def __init__(self, box_min: Sequence[float], box_max: Sequence[float], values) -> None:
        values = np.array(values, dtype=float)
        box_min = np.atleast_1d(np.asarray(box_min, dtype=float)).copy()
        box_max = np.atleast_1d(np.asarray(box_max, dtype=float)).copy()
        if values.ndim == 1 and box_min.size > 1:
            raise ValidationError("values must be shaped like the grid")
        if box_min.shape != box_max.shape or values.ndim != box_min.size:
            raise ValidationError(
                f"box of dimension {box_min.size} does not match values of ndim {values.ndim}"
            )
        if np.any(box_min >= box_max):
            raise ValidationError("box_min must be < box_max on every axis")
        if any(n < 2 for n in values.shape):
            raise ValidationError("need at least 2 points per axis")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("values must be finite and non-negative")
        for arr in (values, box_min, box_max):
            arr.setflags(write=False)
        self.values = values
        self.box_min = box_min
        self.box_max = box_max

    @classmethod
    def from_function(
        cls,
        fn: Callable[..., np.ndarray],
        box_min: Sequence[float],
        box_max: Sequence[float],
        shape: Sequence[int] | int,
    ) -> GridFunction:
        """Sample ``fn(x_1, ..., x_n)`` (broadcasting over meshgrid arrays)."""
        box_min = np.atleast_1d(np.asarray(box_min, dtype=float))
        box_max = np.atleast_1d(np.asarray(box_max, dtype=float))
        if isinstance(shape, int):
            shape = (shape,) * box_min.size
        axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(box_min, box_max, shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        values = np.broadcast_to(np.asarray(fn(*mesh), dtype=float), tuple(shape))
        return cls(box_min, box_max, values)

    # geometry -------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.box_min.size

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @cached_property
    def step(self) -> np.ndarray:
        return (self.box_max - self.box_min) / (np.asarray(self.shape) - 1)

    @cached_property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.box_min, self.box_max, self.shape)]

    @cached_property
    def cell_edges(self) -> list[np.ndarray]:
        """Per-axis boundaries of the cells owned by the nodes (length n+1)."""
        edges = []
        for ax in self.axes:
            mid = 0.5 * (ax[1:] + ax[:-1])
            edges.append(np.concatenate([[ax[0]], mid, [ax[-1]]]))
        return edges

    @cached_property
    def axis_weights(self) -> list[np.ndarray]:
        return [np.diff(e) for e in self.cell_edges]

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        w = self.axis_weights[0]
        for extra in self.axis_weights[1:]:
            w = np.multiply.outer(w, extra)
        return w

    def points(self) -> np.ndarray:
        """All nodes as an ``(N, dim)`` array in row-major order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def node(self, flat_index) -> np.ndarray:
        idx = np.stack(np.unravel_index(flat_index, self.shape), axis=-1)
        return self.box_min + idx * self.step

    # analysis -------------------------------------------------------------

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def support_floor(self) -> float:
        return SUPPORT_EPS * self.max

    def support_mask(self) -> np.ndarray:
        """Nodes with value above ``SUPPORT_EPS * max f``."""
        if self.max <= 0:
            return np.zeros(self.shape, dtype=bool)
        return self.values > self.support_floor

    def support_hull(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the closure of the region where the interpolant is positive."""
        mask = self.support_mask()
        if not mask.any():
            raise ZeroFunctionError("zero function")
        lo, hi = [], []
        for k in range(self.dim):
            other = tuple(j for j in range(self.dim) if j != k)
            idx = np.flatnonzero(mask.any(axis=other) if other else mask)
            i0 = max(idx[0] - 1, 0)
            i1 = min(idx[-1] + 1, self.shape[k] - 1)
            lo.append(self.axes[k][i0])
            hi.append(self.axes[k][i1])
        return np.array(lo), np.array(hi)

    def integrate(self) -> float:
        return float(np.sum(self.values * self.cell_volumes))

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator(
            tuple(self.axes), self.values, method="linear", bounds_error=False, fill_value=0.0
        )

    def evaluate(self, points) -> np.ndarray:
        """Multilinear interpolation; zero outside the box."""
        pts = np.asarray(points, dtype=float)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        out = self._interpolator(pts.reshape(-1, self.dim))
        return np.maximum(out, 0.0).reshape(pts.shape[:-1])

    # transformations ------------------------------------------------------

    def scaled(self, factor: float) -> GridFunction:
        return GridFunction(self.box_min, self.box_max, self.values * factor)

    def dilated(self, c: float) -> GridFunction:
        """``x -> f(c x)`` for ``c > 0``: the same samples on the box divided by c."""
        return GridFunction(self.box_min / c, self.box_max / c, self.values)

    def marginal(self, keep_axis: int = -1) -> GridFunction:
        """Integrate out every axis except ``keep_axis``."""
        keep = keep_axis % self.dim
        vals = self.values
        for k in reversed(range(self.dim)):
            if k == keep:
                continue
            vals = np.tensordot(vals, self.axis_weights[k], axes=([k], [0]))
        return GridFunction([self.box_min[keep]], [self.box_max[keep]], vals)

    def same_grid(self, other: GridFunction) -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.box_min, other.box_min)
            and np.array_equal(self.box_max, other.box_max)
        )

    def __repr__(self) -> str:
        return (
            f"GridFunction(dim={self.dim}, shape={self.shape}, "
            f"box=[{self.box_min.tolist()}, {self.box_max.tolist()}])"
        )


def integrate(f: GridFunction) -> float:
    return f.integrate()


def superlevel_threshold_values(f: GridFunction, count: int) -> np.ndarray:
    """``count`` uniformly spaced thresholds ``max f * k / count``, k = 1..count."""
    if count < 2:
        raise ValidationError("count must be >= 2")
    top = f.max
    if top <= 0:
        raise ZeroFunctionError("zero function has no superlevel sets")
    return top * np.arange(1, count + 1) / count


def alpha_concavity_check(
    f: GridFunction,
    alpha: float,
    n_pairs: int = 10_000,
    seed: int = 0,
    tol: float | None = None,
    max_denominator: int = 8,
) -> CheckReport:
    """Search for violations of ``f((1-l)x + l y) >= M_alpha^l(f(x), f(y))``.

    Pairs are drawn from support nodes with ``y - x`` divisible by a random
    ``d`` in ``2..max_denominator`` on every axis, and ``l = j/d``.  The
    interpolated point is then a node, so no interpolation error enters and
    grid samples of a truly alpha-concave function pass to rounding.

    The margin is absolute; ``tol`` defaults to ``1e-9 * max f``.
    """
    mask = f.support_mask()
    supp = np.flatnonzero(mask)
    if supp.size == 0:
        raise ZeroFunctionError("zero function")
    if tol is None:
        tol = 1e-9 * f.max
    rng = np.random.default_rng(seed)
    shape = np.asarray(f.shape)
    idx = np.stack(np.unravel_index(supp, f.shape), axis=-1)
    flat_vals = f.values.ravel()

    ds = rng.integers(2, max_denominator + 1, size=n_pairs)
    worst = (math.inf, "", math.nan, math.nan)
    for d in np.unique(ds):
        m = int(np.sum(ds == d))
        key = np.zeros(len(idx), dtype=np.int64)
        for k in range(f.dim):
            key = key * d + idx[:, k] % d
        order = np.argsort(key, kind="stable")
        sorted_key = key[order]
        xi = rng.integers(0, len(idx), size=m)
        kx = key[xi]
        start = np.searchsorted(sorted_key, kx, side="left")
        stop = np.searchsorted(sorted_key, kx, side="right")
        yi = order[start + (rng.random(m) * (stop - start)).astype(np.int64)]
        j = rng.integers(1, d, size=m)
        ix, iy = idx[xi], idx[yi]
        iz = ix + (j[:, None] * (iy - ix)) // d
        if np.any(iz < 0) or np.any(iz >= shape):
            raise AssertionError("lattice point left the grid")
        fx = flat_vals[np.ravel_multi_index(ix.T, f.shape)]
        fy = flat_vals[np.ravel_multi_index(iy.T, f.shape)]
        fz = flat_vals[np.ravel_multi_index(iz.T, f.shape)]
        lam = j / d
        rhs = mean_grouped(alpha, lam, fx, fy)
        margins = fz - rhs
        w = int(np.argmin(margins))
        if margins[w] < worst[0]:
            x = f.box_min + ix[w] * f.step
            y = f.box_min + iy[w] * f.step
            witness = f"x={x.tolist()};y={y.tolist()};lambda={float(lam[w])!r}"
            worst = (float(margins[w]), witness, float(fz[w]), float(rhs[w]))
    return CheckReport(
        check="alpha_concavity",
        lhs=worst[2],
        rhs=worst[3],
        margin=worst[0],
        tolerance=tol,
        witness=worst[1],
        samples_checked=n_pairs,
        seed=seed,
        notes=(f"alpha={alpha!r}",),
    )


def mean_grouped(s: float, lam: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise ``M_s^{lam_i}(a_i, b_i)`` for a small set of distinct weights."""
    out = np.empty_like(a)
    for l in np.unique(lam):
        sel = lam == l
        out[sel] = mean(s, float(l), a[sel], b[sel])
    return out
