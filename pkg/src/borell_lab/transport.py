"""Monotone transport on the line and the certificates built from it.

Also defines the two callable ingredients of the Borell inequality: the
coordinatewise map ``phi`` (:class:`CoordinateMap`) and the 1-homogeneous
combiner ``Phi`` (:class:`Combiner`).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, UnsupportedCombinerError, ValidationError, ZeroFunctionError
from .funcgrid import GridFunction
from .means import check_weight, format_ext, mean
from .report import CheckReport

NORMALIZATION_TOL = 1e-9


# --------------------------------------------------------------------------
# coordinate maps


class ScalarMap:
    """One coordinate ``phi_k(x_k, y_k)`` with both partial derivatives."""

    name = "scalar"

    def value(self, x, y):
        raise NotImplementedError

    def dx(self, x, y):
        raise NotImplementedError

    def dy(self, x, y):
        raise NotImplementedError


@dataclass(frozen=True)
class AffineMap(ScalarMap):
    """``a x + b y`` with ``a, b > 0``; ``AffineMap.convex(lam)`` is ``(1-lam) x + lam y``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("affine coefficients must be positive")

    @classmethod
    def convex(cls, lam: float) -> AffineMap:
        lam = check_weight(lam)
        if lam in (0.0, 1.0):
            raise ValidationError("lambda in {0, 1} gives a zero partial derivative")
        return cls(1.0 - lam, lam)

    @property
    def name(self) -> str:
        return f"affine(a={self.a!r},b={self.b!r})"

    def value(self, x, y):
        return self.a * np.asarray(x, dtype=float) + self.b * np.asarray(y, dtype=float)

    def dx(self, x, y):
        return np.full(np.broadcast(x, y).shape, self.a)

    def dy(self, x, y):
        return np.full(np.broadcast(x, y).shape, self.b)


@dataclass(frozen=True)
class PowerMeanMap(ScalarMap):
    """``M_p^lam(x, y)`` on ``(0, inf)``; partials ``(1-lam)(x/M)^(p-1)`` and ``lam (y/M)^(p-1)``."""

    p: float
    lam: float

    def __post_init__(self) -> None:
        check_weight(self.lam)
        if self.lam in (0.0, 1.0):
            raise ValidationError("lambda in {0, 1} gives a zero partial derivative")
        if not math.isfinite(self.p):
            raise ValidationError("power-mean maps need a finite exponent")

    @property
    def name(self) -> str:
        return f"powermean(p={self.p!r},lambda={self.lam!r})"

    def value(self, x, y):
        return mean(self.p, self.lam, x, y)

    def dx(self, x, y):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (1.0 - self.lam) * (x / self.value(x, y)) ** (self.p - 1.0)

    def dy(self, x, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.lam * (y / self.value(x, y)) ** (self.p - 1.0)


class CoordinateMap:
    """``phi = (phi_1, ..., phi_n)`` acting coordinatewise on ``(x, y)``."""

    def __init__(self, components: Sequence[ScalarMap]) -> None:
        if not components:
            raise DimensionError("a coordinate map needs at least one component")
        self.components = tuple(components)

    @classmethod
    def affine(cls, lam: float, dim: int = 1) -> CoordinateMap:
        return cls([AffineMap.convex(lam)] * dim)

    @classmethod
    def power_mean(cls, p: Sequence[float] | float, lam: float, dim: int | None = None) -> CoordinateMap:
        if isinstance(p, (int, float)):
            p = [float(p)] * (dim or 1)
        return cls([PowerMeanMap(float(pk), lam) for pk in p])

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def name(self) -> str:
        names = {c.name for c in self.components}
        if len(names) == 1:
            return f"{names.pop()}^{self.dim}"
        return "(" + ",".join(c.name for c in self.components) + ")"

    def _split(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape[-1] != self.dim or y.shape[-1] != self.dim:
            raise DimensionError(f"points must have {self.dim} coordinates")
        return x, y

    def value(self, x, y) -> np.ndarray:
        x, y = self._split(x, y)
        return np.stack([c.value(x[..., k], y[..., k]) for k, c in enumerate(self.components)], axis=-1)

    def dx(self, x, y) -> np.ndarray:
        x, y = self._split(x, y)
        return np.stack([c.dx(x[..., k], y[..., k]) for k, c in enumerate(self.components)], axis=-1)

    def dy(self, x, y) -> np.ndarray:
        x, y = self._split(x, y)
        return np.stack([c.dy(x[..., k], y[..., k]) for k, c in enumerate(self.components)], axis=-1)

    def validate(self, x, y) -> None:
        """Raise unless both partials are finite and positive at the given pairs."""
        dx, dy = self.dx(x, y), self.dy(x, y)
        good = np.isfinite(dx) & np.isfinite(dy) & (dx > 0) & (dy > 0)
        if not np.all(good):
            raise ContractError(f"{self.name} has a non-positive partial derivative on the domain")

    def exponents(self) -> np.ndarray | None:
        """Per-axis power-mean exponents, or ``None`` if any component is not a mean.

        The convex affine map is the power mean with exponent 1.
        """
        out = []
        lams = set()
        for c in self.components:
            if isinstance(c, PowerMeanMap):
                out.append(c.p)
                lams.add(c.lam)
            elif isinstance(c, AffineMap) and math.isclose(c.a + c.b, 1.0, abs_tol=1e-15):
                out.append(1.0)
                lams.add(c.b)
            else:
                return None
        if len(lams) != 1:
            return None
        return np.array(out)


# --------------------------------------------------------------------------
# combiners


class Combiner:
    """A continuous, 1-homogeneous function ``Phi(a, b)`` increasing in each variable.

    Both properties are spot-checked at construction on a fixed sample.
    """

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray], name: str = "custom", validate: bool = True) -> None:
        self._fn = fn
        self.name = name
        if validate:
            self._validate()

    def __call__(self, a, b):
        a_arr = np.asarray(a, dtype=float)
        b_arr = np.asarray(b, dtype=float)
        out = np.asarray(self._fn(a_arr, b_arr), dtype=float)
        if a_arr.ndim == 0 and b_arr.ndim == 0:
            return float(out)
        return out

    def _validate(self) -> None:
        rng = np.random.default_rng(12345)
        a = np.concatenate([[0.0, 1.0, 0.0], rng.uniform(0.0, 10.0, 256)])
        b = np.concatenate([[1.0, 0.0, 0.0], rng.uniform(0.0, 10.0, 256)])
        t = rng.uniform(0.01, 100.0, a.size)
        base = self(a, b)
        if np.any(base < 0) or not np.all(np.isfinite(base)):
            raise ValidationError(f"{self.name}: values must be finite and non-negative")
        scaled = self(t * a, t * b)
        if np.any(np.abs(scaled - t * base) > 1e-9 * np.maximum(t * base, 1e-300)):
            raise ValidationError(f"{self.name}: not homogeneous of degree 1")
        da = rng.uniform(0.0, 1.0, a.size)
        slack = 1e-12 * np.maximum(base, 1.0)
        if np.any(self(a + da, b) < base - slack) or np.any(self(a, b + da) < base - slack):
            raise ValidationError(f"{self.name}: not monotone in each argument")

    @property
    def at_10(self) -> float:
        return self(1.0, 0.0)

    @property
    def at_01(self) -> float:
        return self(0.0, 1.0)

    def __repr__(self) -> str:
        return f"Combiner({self.name})"


class MeanCombiner(Combiner):
    """``Phi = M_s^lam``."""

    def __init__(self, s: float, lam: float) -> None:
        self.s = float(s)
        self.lam = check_weight(lam)
        super().__init__(lambda a, b: mean(self.s, self.lam, a, b), f"mean(s={format_ext(self.s)},lambda={self.lam!r})", validate=False)


class MinkowskiCombiner(Combiner):
    """``Phi(a, b) = (a^(1/n) + b^(1/n))^n``."""

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValidationError("n must be >= 1")
        self.n = int(n)
        super().__init__(
            lambda a, b: (a ** (1.0 / self.n) + b ** (1.0 / self.n)) ** self.n,
            f"minkowski(n={self.n})",
            validate=False,
        )


def rescaled_combiner(Phi: Combiner, mass_f: float, mass_g: float) -> Combiner:
    """``Phi~(a, b) = Phi(a mf / S, b mg / S)`` with ``S = Phi(mf, mg)``; ``Phi~(1, 1) = 1``."""
    total = Phi(mass_f, mass_g)
    return Combiner(lambda a, b: Phi(a * mass_f / total, b * mass_g / total), f"rescaled[{Phi.name}]", validate=False)


# --------------------------------------------------------------------------
# transport


@dataclass(frozen=True)
class TransportMap:
    """Samples of a non-decreasing map ``T`` and its derivative on ``supp(f)``."""

    xs: np.ndarray
    ts: np.ndarray
    dts: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.diff(self.ts) < 0):
            raise ValidationError("transport map must be non-decreasing")
        if np.any(self.dts < 0):
            raise ValidationError("transport derivative must be non-negative")

    def __call__(self, x):
        return np.interp(x, self.xs, self.ts)


def _cdf_nodes(f: GridFunction) -> np.ndarray:
    """Cumulative trapezoid sums at the nodes; the last entry is ``integrate(f)``."""
    v = f.values
    steps = 0.5 * (v[1:] + v[:-1]) * np.diff(f.axes[0])
    return np.concatenate([[0.0], np.cumsum(steps)])


def generalized_inverse(cdf_nodes: np.ndarray, ys: np.ndarray, q) -> np.ndarray:
    """Least ``y`` with ``G(y) >= q`` for the piecewise-linear ``G`` through ``(ys, cdf_nodes)``."""
    q = np.clip(np.asarray(q, dtype=float), 0.0, cdf_nodes[-1])
    j = np.searchsorted(cdf_nodes, q, side="left")
    out = np.empty_like(q)
    first = j == 0
    out[first] = ys[0]
    jj = j[~first]
    g0, g1 = cdf_nodes[jj - 1], cdf_nodes[jj]
    out[~first] = ys[jj - 1] + (q[~first] - g0) / (g1 - g0) * (ys[jj] - ys[jj - 1])
    return out


def _require_1d_normalized(*fs: GridFunction) -> None:
    for f in fs:
        if f.dim != 1:
            raise DimensionError("transport works on one-dimensional grid functions")
        if f.max <= 0:
            raise ZeroFunctionError("zero function")
        mass = f.integrate()
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise ContractError(f"inputs must have unit mass (got {mass!r}); normalize first")


def monotone_transport(f: GridFunction, g: GridFunction) -> TransportMap:
    """``T = G^{-1} o F`` from the piecewise-linear CDFs, sampled at the support nodes of ``f``.

    ``T'`` is ``f(x) / g(T(x))`` where ``g(T(x))`` exceeds the support floor and a
    one-sided difference of ``T`` elsewhere.
    """
    _require_1d_normalized(f, g)
    F = _cdf_nodes(f)
    G = _cdf_nodes(g)
    sel = np.flatnonzero(f.support_mask())
    xs = f.axes[0][sel]
    lo, hi = g.support_hull()
    ts = np.clip(generalized_inverse(G, g.axes[0], F[sel]), lo[0], hi[0])
    ts = np.maximum.accumulate(ts)

    g_at_t = g.evaluate(ts)
    fx = f.values[sel]
    dts = np.empty_like(ts)
    live = g_at_t > g.support_floor
    dts[live] = fx[live] / g_at_t[live]
    if np.any(~live):
        fd = np.empty_like(ts)
        if len(ts) > 1:
            fd[:-1] = np.diff(ts) / np.diff(xs)
            fd[-1] = fd[-2]
        else:
            fd[:] = 0.0
        dts[~live] = fd[~live]
    return TransportMap(xs, ts, dts)


def pushforward_residual(f: GridFunction, g: GridFunction, T: TransportMap) -> float:
    """Worst violation of ``f = g(T) T'`` over the cells of the support of ``f``.

    Each pair of adjacent support nodes is checked at the cell midpoint with
    ``T'`` taken as the secant slope of ``T`` and ``g`` interpolated at the image
    midpoint, so the certificate does not reuse the stored ``T'``.  Cells
    whose image midpoint falls where ``g`` vanishes, or whose image spans a
    zero node of ``g`` (a jump over a support gap), are skipped.
    """
    if len(T.xs) < 2:
        return 0.0
    step = f.step[0]
    adjacent = np.abs(np.diff(T.xs) - step) <= 1e-9 * step
    xm = 0.5 * (T.xs[1:] + T.xs[:-1])
    tm = 0.5 * (T.ts[1:] + T.ts[:-1])
    slope = np.diff(T.ts) / np.diff(T.xs)
    fm = f.evaluate(xm)
    gm = g.evaluate(tm)
    # cells whose image spans a zero node of g jump over a gap in its support
    zeros = np.concatenate([[0], np.cumsum(g.values <= g.support_floor)])
    ys = g.axes[0]
    inner = zeros[np.searchsorted(ys, T.ts[1:], side="left")] - zeros[np.searchsorted(ys, T.ts[:-1], side="right")]
    use = adjacent & (gm > g.support_floor) & (inner == 0)
    if not np.any(use):
        return 0.0
    return float(np.max(np.abs(fm[use] - gm[use] * slope[use])))


def transport_certificate(
    f: GridFunction,
    g: GridFunction,
    phi: CoordinateMap,
    Phi: Combiner,
    h: GridFunction | None = None,
    tol: float = 1e-3,
) -> CheckReport:
    """Change-of-variables lower bound ``LB = int Phi(f(x), g(T(x)) T'(x)) dx``.

    The report compares ``LB`` with ``Phi(1, 1)``; its margin is the relative
    slack ``LB / Phi(1, 1) - 1``.  ``details`` carries ``theta = phi(x, T(x))``,
    ``dtheta``, the integrand and, if ``h`` is supplied, the pointwise
    comparison ``h(theta) dtheta >= integrand`` and its integral.
    """
    if phi.dim != 1:
        raise DimensionError("transport certificates are one-dimensional")
    T = monotone_transport(f, g)
    xs = T.xs[:, None]
    ts = T.ts[:, None]
    phi.validate(xs, ts)
    sel = np.flatnonzero(f.support_mask())
    weights = f.cell_volumes[sel]
    fx = f.values[sel]
    pushed = g.evaluate(T.ts) * T.dts
    integrand = Phi(fx, pushed)
    lb = float(np.sum(weights * integrand))
    target = Phi(1.0, 1.0)
    theta = phi.value(xs, ts)[:, 0]
    dtheta = phi.dx(xs, ts)[:, 0] + phi.dy(xs, ts)[:, 0] * T.dts
    details = {"xs": T.xs, "ts": T.ts, "dts": T.dts, "theta": theta, "dtheta": dtheta, "integrand": integrand}
    notes: tuple[str, ...] = ()
    if h is not None:
        lifted = h.evaluate(theta) * dtheta
        scale = np.maximum(integrand, 1e-300)
        pointwise = (lifted - integrand) / scale
        details["h_lifted"] = lifted
        details["pointwise_margin"] = pointwise
        details["h_change_of_variables"] = float(np.sum(weights * lifted))
        notes = (f"worst pointwise h-margin={float(np.min(pointwise))!r}",)
    k = int(np.argmin(integrand)) if len(integrand) else 0
    return CheckReport(
        check="transport_certificate",
        lhs=lb,
        rhs=target,
        margin=lb / target - 1.0 if target > 0 else lb - target,
        tolerance=tol,
        witness=f"x={float(T.xs[k])!r}" if len(T.xs) else "",
        samples_checked=len(T.xs),
        notes=notes,
        details=details,
    )


def normalize_triple(f: GridFunction, g: GridFunction, Phi: Combiner) -> tuple[GridFunction, GridFunction, float]:
    """Rescale to unit masses.

    ``f~(x) = f(Phi(mf, 0) x) Phi(1, 0)`` and ``g~(x) = g(Phi(0, mg) x) Phi(0, 1)``,
    where ``mf`` and ``mg`` are the masses.  Also returns ``scale = Phi(mf, mg)``.
    """
    phi10, phi01 = Phi.at_10, Phi.at_01
    if phi10 <= 0 or phi01 <= 0:
        raise UnsupportedCombinerError(
            f"{Phi.name}: Phi(1,0) = {phi10!r}, Phi(0,1) = {phi01!r}; normalization needs both positive"
        )
    mf, mg = f.integrate(), g.integrate()
    for m in (mf, mg):
        if not (0.0 < m < math.inf):
            raise ContractError("masses must be finite and positive")
    f_t = f.dilated(Phi(mf, 0.0)).scaled(phi10)
    g_t = g.dilated(Phi(0.0, mg)).scaled(phi01)
    return f_t, g_t, Phi(mf, mg)


def normalize_target(h: GridFunction, scale: float) -> GridFunction:
    """``h~(x) = h(scale x)``, the matching rescaling of the output function."""
    return h.dilated(scale)


def degenerate_mass_bound(f: GridFunction, phi: CoordinateMap, Phi: Combiner, y0: float) -> float:
    """Lower bound ``int f * Phi(1, 0)`` on ``int h`` when ``int g = 0``.

    It comes from pushing ``f`` through ``x -> phi(x, y0)``.
    """
    if phi.dim != 1 or f.dim != 1:
        raise DimensionError("the degenerate-mass bound is one-dimensional")
    xs = f.axes[0][f.support_mask()]
    if xs.size:
        phi.validate(xs[:, None], np.full((xs.size, 1), float(y0)))
    return f.integrate() * Phi.at_10
