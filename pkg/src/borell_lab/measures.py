"""Measures with alpha-concave densities, evaluated on symmetric bodies.

Measures of bodies and of their superlevel pieces share one weighting per
grid cell, so the layer-cake identity holds exactly up to threshold
binning.  In the plane the weight of a cell is the area of its intersection
with the Wulff polygon; in higher dimensions it is the full cell volume when
the node lies in the body and zero otherwise.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
import shapely

from . import kernels
from .bodies import (
    DirectionGrid,
    SupportBody,
    Polygon2D,
    membership,
    p_combination,
    polygon_area,
    random_aligned_polygon,
    random_symmetric_polygon,
    support_of_polytope,
    wulff_polygon,
)
from .errors import ContractError, DimensionError, DomainError, ValidationError
from .funcgrid import GridFunction, alpha_concavity_check, superlevel_threshold_values
from .inequalities import QUADRATURE_TOL, conclusion_exponent
from .means import check_weight, format_ext, mean
from .report import CheckReport

SYMMETRY_TOL = 1e-9
LAYER_CAKE_TOL = 0.01
# Relative tolerance when comparing density values with thresholds.
LEVEL_TOL = 1e-9
GEOMETRY_TOL = 1e-9


class DensityMeasure:
    """``mu(A) = int_A psi`` for a grid density with a declared concavity class.

    The declared ``alpha`` is checked once by sampling (``n_pairs`` lattice
    pairs) and trusted afterwards; the check's report is kept in
    :attr:`validation`.
    """

    def __init__(
        self,
        density: GridFunction,
        alpha: float,
        symmetric: bool = True,
        validate: bool = True,
        n_pairs: int = 10_000,
        seed: int = 0,
    ) -> None:
        alpha = float(alpha)
        if math.isnan(alpha):
            raise ContractError("alpha must not be NaN")
        if density.max <= 0:
            raise ValidationError("density vanishes identically")
        if symmetric:
            if not np.allclose(density.box_min, -density.box_max, rtol=0, atol=1e-12):
                raise ValidationError("a symmetric density needs a symmetric box")
            flipped = density.values[(slice(None, None, -1),) * density.dim]
            if np.max(np.abs(density.values - flipped)) > SYMMETRY_TOL * density.max:
                raise ValidationError("density is not symmetric: psi(-x) != psi(x)")
        self.validation = None
        if validate:
            rep = alpha_concavity_check(density, alpha, n_pairs=n_pairs, seed=seed)
            if not rep.satisfied:
                raise ValidationError(f"density is not {format_ext(alpha)}-concave: {rep.summary()}")
            self.validation = rep
        self.density = density
        self.alpha = alpha
        self.symmetric = symmetric

    @classmethod
    def lebesgue(cls, half_width: float = 4.0, n: int = 1025, dim: int = 2, alpha: float = math.inf) -> DensityMeasure:
        """``psi = 1`` on ``[-half_width, half_width]^dim``."""
        psi = GridFunction([-half_width] * dim, [half_width] * dim, np.ones((n,) * dim))
        return cls(psi, alpha)

    @property
    def dim(self) -> int:
        return self.density.dim

    def __repr__(self) -> str:
        return f"DensityMeasure(alpha={format_ext(self.alpha)}, {self.density!r})"


def _polygon_coverage(grid: GridFunction, P: Polygon2D) -> np.ndarray:
    ex, ey = grid.cell_edges
    V = P.vertices
    e = np.roll(V, -1, axis=0) - V
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    offsets = np.sum(normals * V, axis=1)
    X, Y = np.meshgrid(ex, ey, indexing="ij")
    corners = np.stack([X.ravel(), Y.ravel()], axis=1)
    C = kernels.halfspace_inside(corners, normals, offsets, 1e-12).reshape(X.shape)
    full = C[:-1, :-1] & C[1:, :-1] & C[:-1, 1:] & C[1:, 1:]
    touched = C[:-1, :-1] | C[1:, :-1] | C[:-1, 1:] | C[1:, 1:]
    # A cell meeting the polygon with no corner inside must hold a vertex.
    ix = np.clip(np.searchsorted(ex, V[:, 0], side="right") - 1, 0, len(ex) - 2)
    iy = np.clip(np.searchsorted(ey, V[:, 1], side="right") - 1, 0, len(ey) - 2)
    touched[ix, iy] = True
    cov = np.where(full, grid.cell_volumes, 0.0)
    ci, cj = np.nonzero(touched & ~full)
    if ci.size:
        boxes = shapely.box(ex[ci], ey[cj], ex[ci + 1], ey[cj + 1])
        cov[ci, cj] = shapely.area(shapely.intersection(boxes, shapely.Polygon(V)))
    return cov


def body_coverage(grid: GridFunction, B: SupportBody) -> np.ndarray:
    """Per-cell weight of ``B`` on the cells owned by the grid nodes."""
    if B.dim != grid.dim:
        raise DimensionError(f"body of dimension {B.dim} on a grid of dimension {grid.dim}")
    hw = B.half_widths
    slack = 1e-12 * max(1.0, float(np.max(hw)))
    if np.any(grid.box_min > -hw + slack) or np.any(grid.box_max < hw - slack):
        raise DomainError(
            f"density grid [{grid.box_min.tolist()}, {grid.box_max.tolist()}] does not cover "
            f"the body's bounding box +-{hw.tolist()}"
        )
    if B.dim == 2:
        return _polygon_coverage(grid, B.polygon)
    inside = membership(grid.points(), B).reshape(grid.shape)
    return np.where(inside, grid.cell_volumes, 0.0)


def measure_of_body(mu: DensityMeasure, B: SupportBody, coverage: np.ndarray | None = None) -> float:
    """``int_B psi`` with the cell weights of :func:`body_coverage`."""
    if coverage is None:
        coverage = body_coverage(mu.density, B)
    return float(np.sum(mu.density.values * coverage))


class _Profile:
    """``t -> |B cap {psi >= t}|`` via sorted values and suffix sums.

    Values within ``LEVEL_TOL * max psi`` of a threshold count as equal to it,
    so densities whose levels sit exactly on threshold values are not split
    by rounding.
    """

    def __init__(self, psi: np.ndarray, coverage: np.ndarray) -> None:
        order = np.argsort(psi.ravel(), kind="stable")
        self.sorted = psi.ravel()[order]
        w = coverage.ravel()[order]
        self.suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        self.eps = LEVEL_TOL * float(self.sorted[-1])

    def __call__(self, t) -> np.ndarray:
        idx = np.searchsorted(self.sorted, np.asarray(t, dtype=float) - self.eps, side="left")
        return self.suffix[idx]

    def above(self, t) -> np.ndarray:
        """Right limits ``|B cap {psi > t}|``."""
        idx = np.searchsorted(self.sorted, np.asarray(t, dtype=float) + self.eps, side="right")
        return self.suffix[idx]

    def layer_cake(self, thresholds: np.ndarray) -> float:
        """Trapezoid rule for ``int_0^max f(t) dt``.

        On ``(t_{k-1}, t_k]`` the profile runs from ``f(t_{k-1}+)`` down to
        ``f(t_k)``, so those are the trapezoid heights.  This is exact when no
        density level falls strictly inside a threshold interval, or when
        exactly one does and sits at the interval's midpoint.
        """
        t = np.concatenate([[0.0], thresholds])
        return float(np.sum(0.5 * (self.above(t[:-1]) + self(t[1:])) * np.diff(t)))


def levelset_profile(mu: DensityMeasure, B: SupportBody, thresholds: Sequence[float]) -> np.ndarray:
    """``|B cap {psi >= t}|`` for every threshold ``t``."""
    t = np.asarray(thresholds, dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ContractError("thresholds must be positive and increasing")
    return _Profile(mu.density.values, body_coverage(mu.density, B))(t)


def _lp_exponent(mu: DensityMeasure, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"p must lie in [0, 1], got {p}")
    try:
        return conclusion_exponent([p / mu.dim], mu.alpha)
    except ContractError as exc:
        raise ContractError(f"need alpha >= -p/n: alpha={format_ext(mu.alpha)}, p={p}, n={mu.dim}") from exc


def _relative(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return (lhs - rhs) / rhs
    return 0.0 if lhs >= rhs else -math.inf


def _alpha_notes(mu: DensityMeasure) -> tuple[str, ...]:
    if mu.alpha > 1:
        return (f"alpha={format_ext(mu.alpha)} > 1: outside the proven range alpha <= 1",)
    return ()


def lp_bm_check(
    mu: DensityMeasure, K: SupportBody, L: SupportBody, lam: float, p: float, tol: float = QUADRATURE_TOL
) -> CheckReport:
    """``mu((1-lam)K (+)_p lam L) >= M_s^lam(mu(K), mu(L))`` with ``s = (n/p + 1/alpha)^(-1)``."""
    lam = check_weight(lam)
    s = _lp_exponent(mu, p)
    lhs = measure_of_body(mu, p_combination(lam, p, K, L))
    mk, ml = measure_of_body(mu, K), measure_of_body(mu, L)
    rhs = mean(s, lam, mk, ml)
    return CheckReport(
        check="lp_bm",
        lhs=lhs,
        rhs=rhs,
        margin=_relative(lhs, rhs),
        tolerance=tol,
        notes=(f"p={p!r}", f"exponent={format_ext(s)}") + _alpha_notes(mu),
        details={"mu_K": mk, "mu_L": ml, "exponent": s},
    )


def equiv_pipeline_check(
    mu: DensityMeasure,
    K: SupportBody,
    L: SupportBody,
    lam: float,
    p: float,
    n_thresholds: int = 64,
    tol: float = QUADRATURE_TOL,
    layer_tol: float = LAYER_CAKE_TOL,
) -> CheckReport:
    """Run the level-set reduction of the measure inequality to a 1-D one.

    With ``f(t) = |K cap {psi >= t}|``, ``g(s) = |L cap {psi >= s}|`` and
    ``h(r) = |K_lam cap {psi >= r}|`` on a threshold grid:

    1. pointwise ``h(M_alpha(t, s)) >= M_{p/n}(f(t), g(s))`` for all pairs;
    2. layer-cake integrals of ``f, g, h`` reproduce the measures within
       ``layer_tol``;
    3. ``int h >= M_e(int f, int g)`` with ``e = (n/p + 1/alpha)^(-1)``.

    The margin is the worst of steps 1 and 3.  If step 2 fails, the layer-cake
    error (negated) also enters the margin, so the report fails.
    """
    lam = check_weight(lam)
    s = _lp_exponent(mu, p)
    psi = mu.density
    Klam = p_combination(lam, p, K, L)
    cov = {name: body_coverage(psi, B) for name, B in (("K", K), ("L", L), ("K_lam", Klam))}
    prof = {name: _Profile(psi.values, c) for name, c in cov.items()}
    t = superlevel_threshold_values(psi, n_thresholds)

    f_t, g_s = prof["K"](t), prof["L"](t)
    r = mean(mu.alpha, lam, t[:, None], t[None, :])
    h_r = prof["K_lam"](r)
    point_rhs = mean(p / mu.dim, lam, f_t[:, None], g_s[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        pm = np.where(point_rhs > 0, (h_r - point_rhs) / np.where(point_rhs > 0, point_rhs, 1.0), np.where(h_r >= point_rhs, 0.0, -np.inf))
    wi, wj = np.unravel_index(int(np.argmin(pm)), pm.shape)
    point_margin = float(pm[wi, wj])

    layer_err = {}
    totals = {}
    for name in cov:
        totals[name] = prof[name].layer_cake(t)
        direct = measure_of_body(mu, None, cov[name])
        layer_err[name] = abs(totals[name] - direct) / direct if direct > 0 else abs(totals[name])
    lhs = totals["K_lam"]
    rhs = mean(s, lam, totals["K"], totals["L"])
    conclusion_margin = _relative(lhs, rhs)
    margin = min(point_margin, conclusion_margin)
    notes = [f"p={p!r}", f"exponent={format_ext(s)}", f"thresholds={n_thresholds}"]
    worst_layer = max(layer_err.values())
    if worst_layer > layer_tol:
        margin = min(margin, -worst_layer)
        notes.append(f"layer-cake mismatch {worst_layer!r} > {layer_tol!r}")
    return CheckReport(
        check="equiv_pipeline",
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        tolerance=tol,
        witness=f"t={float(t[wi])!r};s={float(t[wj])!r}",
        samples_checked=int(pm.size),
        notes=tuple(notes) + _alpha_notes(mu),
        details={
            "pointwise_margin": point_margin,
            "conclusion_margin": conclusion_margin,
            "layer_cake_error": layer_err,
            "pointwise_margins": pm,
            "thresholds": t,
        },
    )


def _sample_body(B: SupportBody, n_points: int, rng: np.random.Generator) -> np.ndarray:
    half = B.half_widths
    out, have = [], 0
    while have < n_points:
        pts = rng.uniform(-half, half, size=(max(2 * (n_points - have), 1024), B.dim))
        pts = pts[membership(pts, B)]
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n_points]


def inclusion_chain_check(
    K0: SupportBody, K1: SupportBody, lam: float, p: float, n_points: int = 10_000, seed: int = 0
) -> CheckReport:
    """Every point of ``(1-lam)K0 (+)_p lam K1`` must lie in the Minkowski combination.

    Uniform rejection samples are joined by the polygon vertices in the plane,
    where a violation would show first.
    """
    lam = check_weight(lam)
    if p > 1:
        raise ContractError("the inclusion needs p <= 1")
    inner = p_combination(lam, p, K0, K1)
    outer = p_combination(lam, 1.0, K0, K1)
    pts = _sample_body(inner, n_points, np.random.default_rng(seed))
    if inner.dim == 2:
        pts = np.vstack([pts, inner.polygon.vertices])
    bad = ~membership(pts, outer)
    count = int(np.count_nonzero(bad))
    witness = f"x={pts[np.argmax(bad)].tolist()}" if count else ""
    return CheckReport(
        check="inclusion_chain",
        lhs=float(count),
        rhs=0.0,
        margin=-float(count) if count else 0.0,
        tolerance=0.0,
        witness=witness,
        samples_checked=len(pts),
        seed=seed,
        notes=(f"p={p!r}",),
    )


def planar_polygon_pair(seed: int, trial: int, m: int, align: int | None = None) -> tuple[SupportBody, SupportBody, float, float]:
    """Random symmetric polygons for a sweep trial, with their exact areas.

    With ``align`` the facet normals lie on the planar ``align``-grid; without
    it the vertices are random and facet normals generally miss the grid,
    which costs a first-order (``O(1/m)``) superset bias.
    """
    grid = DirectionGrid.planar(m)
    if align is None:
        vk = random_symmetric_polygon([seed, trial, 0])
        vl = random_symmetric_polygon([seed, trial, 1])
    else:
        vk = random_aligned_polygon([seed, trial, 0], align)
        vl = random_aligned_polygon([seed, trial, 1], align)
    ak = polygon_area(Polygon2D(vk))
    al = polygon_area(Polygon2D(vl))
    return support_of_polytope(vk, grid), support_of_polytope(vl, grid), ak, al


def planar_lp_bm_trial(seed: int, trial: int, lam: float, p: float, m: int = 720, aligned: bool = False) -> CheckReport:
    """Lebesgue ``L_p`` Brunn-Minkowski in the plane for one random polygon pair.

    The left side is the Wulff area on ``m`` directions; the right side uses
    the exact polygon areas.  The grid bias is the relative change in the
    left side when ``m`` doubles; it is reported in the details along with
    the bias at ``2m``.  The tolerance is the bias plus ``GEOMETRY_TOL``.
    ``aligned`` swaps the vertex-random polygons for ones with facet normals
    on the ``m``-grid, which the grid represents without bias.
    """
    lam = check_weight(lam)
    s = conclusion_exponent([p / 2.0], math.inf)
    areas = []
    for mm in (m, 2 * m, 4 * m):
        K, L, ak, al = planar_polygon_pair(seed, trial, mm, m if aligned else None)
        areas.append(polygon_area(wulff_polygon(p_combination(lam, p, K, L))))
    lhs = areas[0]
    rhs = mean(s, lam, ak, al)
    bias = abs(areas[0] - areas[1]) / areas[1]
    bias_fine = abs(areas[1] - areas[2]) / areas[2]
    return CheckReport(
        check="planar_lp_bm",
        lhs=lhs,
        rhs=rhs,
        margin=_relative(lhs, rhs),
        tolerance=bias + GEOMETRY_TOL,
        witness=f"trial={trial};lambda={lam!r}",
        seed=seed,
        notes=(f"p={p!r}", f"m={m}", "aligned" if aligned else "vertex-random"),
        details={"bias": bias, "bias_fine": bias_fine, "areas": areas},
    )
