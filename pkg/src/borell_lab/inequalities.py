"""Verifiers for the Borell-Brunn-Minkowski inequality and its corollaries.

Hypotheses quantify over all points and all scale vectors, so sampling can
only refute them.  A passing hypothesis report means "no violation found at
this sampling density", never a proof.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError, DimensionError, ZeroFunctionError
from .funcgrid import GridFunction
from .means import check_weight, format_ext, mean, reciprocal
from .report import CheckReport
from .transport import Combiner, CoordinateMap

QUADRATURE_TOL = 1e-3


@dataclass(frozen=True)
class HypothesisSampler:
    """How densely to probe the pointwise hypothesis.

    ``n_xy`` support pairs, each with ``n_scale`` scale vectors drawn
    log-uniformly from ``scale_range``.  The first scale sample of every pair
    is ``rho = eta = 1``.
    """

    n_xy: int = 10_000
    n_scale: int = 16
    scale_range: tuple[float, float] = (1e-3, 1e3)
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.scale_range
        if self.n_xy < 1 or self.n_scale < 1:
            raise ContractError("sampler counts must be >= 1")
        if not 0 < lo <= hi:
            raise ContractError("scale range must be positive")


def _relative_margin(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rhs > 0, (lhs - rhs) / np.where(rhs > 0, rhs, 1.0), np.where(lhs >= rhs, 0.0, -np.inf))


def borell_hypothesis_check(
    f: GridFunction,
    g: GridFunction,
    h: GridFunction,
    phi: CoordinateMap,
    Phi: Combiner,
    sampler: HypothesisSampler = HypothesisSampler(),
    tol: float = QUADRATURE_TOL,
) -> CheckReport:
    """Probe ``h(phi(x,y)) prod_k (d_x phi_k rho_k + d_y phi_k eta_k) >= Phi(f(x) prod rho, g(y) prod eta)``.

    Points ``x`` and ``y`` are support nodes of ``f`` and ``g``; ``h`` is read by
    multilinear interpolation.  Scale vectors are normalized to
    ``prod rho = 1``: multiplying ``(rho, eta)`` by ``t`` multiplies both sides
    by ``t^n``.  Pairs where a partial of ``phi`` is infinite (e.g. power
    means at a zero coordinate) are skipped.  The margin is relative to the
    right-hand side.
    """
    n = f.dim
    if g.dim != n or h.dim != n or phi.dim != n:
        raise DimensionError("f, g, h and phi must share one dimension")
    supp_f = np.flatnonzero(f.support_mask())
    supp_g = np.flatnonzero(g.support_mask())
    if supp_f.size == 0 or supp_g.size == 0:
        raise ZeroFunctionError("empty support")
    rng = np.random.default_rng(sampler.seed)
    xi = supp_f[rng.integers(0, supp_f.size, sampler.n_xy)]
    yi = supp_g[rng.integers(0, supp_g.size, sampler.n_xy)]
    X, Y = f.node(xi), g.node(yi)
    fx, gy = f.values.ravel()[xi], g.values.ravel()[yi]

    dx, dy = phi.dx(X, Y), phi.dy(X, Y)
    finite = np.all(np.isfinite(dx) & np.isfinite(dy), axis=1)
    if np.any((dx[finite] <= 0) | (dy[finite] <= 0)):
        raise ContractError(f"{phi.name} has a non-positive partial derivative on supp(f) x supp(g)")
    skipped = int(np.count_nonzero(~finite))
    X, Y, fx, gy, dx, dy = X[finite], Y[finite], fx[finite], gy[finite], dx[finite], dy[finite]
    if len(X) == 0:
        raise ContractError("no sampled pair lies where phi is differentiable")
    hz = h.evaluate(phi.value(X, Y))

    lo, hi = np.log(sampler.scale_range[0]), np.log(sampler.scale_range[1])
    m, s = len(X), sampler.n_scale
    log_rho = rng.uniform(lo, hi, (m, s, n))
    log_rho -= log_rho.mean(axis=2, keepdims=True)
    log_eta = rng.uniform(lo, hi, (m, s, n))
    log_rho[:, 0, :] = 0.0
    log_eta[:, 0, :] = 0.0
    rho, eta = np.exp(log_rho), np.exp(log_eta)
    jac = np.prod(dx[:, None, :] * rho + dy[:, None, :] * eta, axis=2)
    lhs = hz[:, None] * jac
    eta_prod = np.exp(log_eta.sum(axis=2))
    rhs = Phi(np.broadcast_to(fx[:, None], eta_prod.shape), gy[:, None] * eta_prod)
    margins = _relative_margin(lhs, rhs)
    w = np.unravel_index(int(np.argmin(margins)), margins.shape)
    witness = (
        f"x={X[w[0]].tolist()};y={Y[w[0]].tolist()};"
        f"rho={rho[w].tolist()};eta={eta[w].tolist()}"
    )
    notes = [f"sampled n_xy={sampler.n_xy},n_scale={s}: refutation only"]
    if skipped:
        notes.append(f"skipped {skipped} pairs with infinite partials")
    return CheckReport(
        check="borell_hypothesis",
        lhs=float(lhs[w]),
        rhs=float(rhs[w]),
        margin=float(margins[w]),
        tolerance=tol,
        witness=witness,
        samples_checked=int(margins.size),
        seed=sampler.seed,
        notes=tuple(notes),
    )


def borell_conclusion_check(
    f: GridFunction, g: GridFunction, h: GridFunction, Phi: Combiner, tol: float = QUADRATURE_TOL
) -> CheckReport:
    """``int h >= Phi(int f, int g)``; the margin is relative to the right-hand side."""
    if not (f.dim == g.dim == h.dim):
        raise DimensionError("f, g, h must share one dimension")
    lhs = h.integrate()
    rhs = Phi(f.integrate(), g.integrate())
    return CheckReport(
        check="borell_conclusion",
        lhs=lhs,
        rhs=rhs,
        margin=float(_relative_margin(lhs, rhs)),
        tolerance=tol,
        details={"int_f": f.integrate(), "int_g": g.integrate()},
    )


def conclusion_exponent(p: Sequence[float], gamma: float) -> float:
    """``(sum_i 1/p_i + 1/gamma)^(-1)`` with ``1/0 = +inf`` and ``1/(+-inf) = 0``.

    A vanishing sum gives ``-inf``, the limit from the admissible side.
    Admissibility: for one coordinate ``p <= 1`` and ``gamma >= -p``; for
    several, ``p_i`` in ``[0, 1]`` and ``gamma >= -(sum 1/p_i)^(-1)``.  The
    all-ones vector recovers ``gamma / (1 + gamma n)``.
    """
    p = [float(v) for v in p]
    gamma = float(gamma)
    if not p:
        raise DimensionError("exponent vector must be non-empty")
    if any(math.isnan(v) for v in p) or math.isnan(gamma):
        raise ContractError("NaN exponent")
    if len(p) == 1:
        if p[0] > 1:
            raise ContractError(f"need p <= 1, got {p[0]}")
        floor = -p[0]
    else:
        if any(not 0.0 <= v <= 1.0 for v in p):
            raise ContractError("need every p_i in [0, 1]")
        floor = -reciprocal(sum(reciprocal(v) for v in p))
    if gamma < floor - 1e-12:
        raise ContractError(f"gamma = {gamma} is below the admissible bound {floor}")
    total = sum(reciprocal(v) for v in p) + reciprocal(gamma)
    if math.isinf(total):
        return 0.0
    if abs(total) < 1e-15:
        return -math.inf
    return 1.0 / total


def _default_axis_size(f: GridFunction, g: GridFunction, lam: float, lo: np.ndarray, hi: np.ndarray, cap: int) -> list[int]:
    step = np.minimum((1.0 - lam) * f.step, lam * g.step)
    n = np.rint((hi - lo) / step).astype(int) + 1
    return [int(min(max(k, 2), cap)) for k in n]


def _sup_convolution(
    f: GridFunction,
    g: GridFunction,
    p: np.ndarray,
    gamma: float,
    lam: float,
    shape: Sequence[int] | None,
    cap: int,
) -> GridFunction:
    lo = _mean_components(p, lam, f.box_min, g.box_min)
    hi = _mean_components(p, lam, f.box_max, g.box_max)
    if shape is None:
        shape = _default_axis_size(f, g, lam, lo, hi, cap)
    shape = [int(k) for k in shape]
    step = (hi - lo) / (np.asarray(shape) - 1)
    mf, mg = f.support_mask().ravel(), g.support_mask().ravel()
    xs, ys = f.points()[mf], g.points()[mg]
    fv, gv = f.values.ravel()[mf], g.values.ravel()[mg]
    flat = kernels.sup_convolution(xs, fv, ys, gv, p, lam, gamma, lo, step, shape)
    return GridFunction(lo, hi, flat.reshape(shape))


def _mean_components(p: np.ndarray, lam: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.empty(len(p))
    for k, pk in enumerate(p):
        out[k] = (1.0 - lam) * x[k] + lam * y[k] if pk == 1.0 else mean(pk, lam, x[k], y[k])
    return out


def sup_convolution_bbl(
    f: GridFunction,
    g: GridFunction,
    gamma: float,
    lam: float,
    shape: Sequence[int] | None = None,
    cap: int = 1 << 14,
) -> GridFunction:
    """Smallest ``h`` on a grid with ``h((1-lam)x + lam y) >= M_gamma^lam(f(x), g(y))``.

    The value of a cell is the largest ``M_gamma(f(x), g(y))`` over support
    node pairs whose combination falls in that cell.  The default output
    spacing is ``min((1-lam) step_f, lam step_g)`` per axis (at most ``cap``
    nodes).  With equal input steps and ``lam`` in {1/4, 1/2, 3/4} that
    spacing is the lattice of combined points, so each cell holds exactly
    one lattice point.
    """
    lam = check_weight(lam)
    n = f.dim
    if g.dim != n:
        raise DimensionError("f and g must share one dimension")
    if gamma < -1.0 / n:
        raise ContractError(f"gamma must be >= -1/n = {-1.0 / n}")
    if lam == 0.0:
        return GridFunction(f.box_min, f.box_max, f.values)
    if lam == 1.0:
        return GridFunction(g.box_min, g.box_max, g.values)
    return _sup_convolution(f, g, np.ones(n), gamma, lam, shape, cap)


def sup_convolution_nonlinear(
    f: GridFunction,
    g: GridFunction,
    p: Sequence[float],
    gamma: float,
    lam: float,
    shape: Sequence[int] | None = None,
    cap: int = 1 << 14,
) -> GridFunction:
    """Smallest ``h`` with ``h(M_p^lam(x, y)) >= M_gamma^lam(f(x), g(y))`` on ``[0, inf)^n``."""
    lam = check_weight(lam)
    p = np.asarray([float(v) for v in p])
    n = f.dim
    if g.dim != n or len(p) != n:
        raise DimensionError("f, g and p must share one dimension")
    if np.any(f.box_min < 0) or np.any(g.box_min < 0):
        raise ContractError("the nonlinear extension lives on [0, inf)^n")
    if np.any((p < 0) | (p > 1)):
        raise ContractError("need every p_i in [0, 1]")
    conclusion_exponent(p, gamma)
    if lam == 0.0:
        return GridFunction(f.box_min, f.box_max, f.values)
    if lam == 1.0:
        return GridFunction(g.box_min, g.box_max, g.values)
    return _sup_convolution(f, g, p, gamma, lam, shape, cap)


def bbl_check(f: GridFunction, g: GridFunction, gamma: float, lam: float, tol: float = QUADRATURE_TOL) -> CheckReport:
    """Build the minimal ``h`` and test ``int h >= M_{gamma/(1+gamma n)}(int f, int g)``."""
    h = sup_convolution_bbl(f, g, gamma, lam)
    s = conclusion_exponent([1.0] * f.dim, gamma)
    lhs = h.integrate()
    rhs = mean(s, lam, f.integrate(), g.integrate())
    return CheckReport(
        check="bbl",
        lhs=lhs,
        rhs=rhs,
        margin=float(_relative_margin(lhs, rhs)),
        tolerance=tol,
        notes=(f"gamma={format_ext(gamma)}", f"exponent={format_ext(s)}"),
        details={"h": h, "exponent": s},
    )


def nonlinear_check(
    f: GridFunction, g: GridFunction, p: Sequence[float], gamma: float, lam: float, tol: float = QUADRATURE_TOL
) -> CheckReport:
    """Build the minimal ``h`` for ``M_p`` and test the exponent from :func:`conclusion_exponent`."""
    h = sup_convolution_nonlinear(f, g, p, gamma, lam)
    s = conclusion_exponent(p, gamma)
    lhs = h.integrate()
    rhs = mean(s, lam, f.integrate(), g.integrate())
    return CheckReport(
        check="nonlinear",
        lhs=lhs,
        rhs=rhs,
        margin=float(_relative_margin(lhs, rhs)),
        tolerance=tol,
        notes=(f"p={[float(v) for v in p]}", f"gamma={format_ext(gamma)}", f"exponent={format_ext(s)}"),
        details={"h": h, "exponent": s},
    )


def tensorize_reduce(
    f: GridFunction,
    g: GridFunction,
    h: GridFunction,
    phi: CoordinateMap,
    Phi: Combiner,
    sampler: HypothesisSampler = HypothesisSampler(),
    tol: float = QUADRATURE_TOL,
) -> CheckReport:
    """Induction step: reduce to the last coordinate and test the inherited 1-D hypothesis.

    The marginals are ``F(s) = int f(x, s) dx``, and likewise ``G`` and ``H``.
    Applying the inequality in the first ``n`` coordinates to each slice pair
    yields ``H(phi_last(s, t)) (d_s phi_last rho + d_t phi_last eta) >= Phi(F(s) rho, G(t) eta)``,
    which is sampled here.
    """
    if f.dim < 2:
        raise DimensionError("tensorization needs dimension >= 2")
    if not (f.dim == g.dim == h.dim == phi.dim):
        raise DimensionError("f, g, h and phi must share one dimension")
    F, G, H = f.marginal(-1), g.marginal(-1), h.marginal(-1)
    if F.max <= 0 or G.max <= 0:
        raise ZeroFunctionError("empty marginal support")
    last = CoordinateMap([phi.components[-1]])
    rep = borell_hypothesis_check(F, G, H, last, Phi, sampler, tol)
    return CheckReport(
        check="tensorize",
        lhs=rep.lhs,
        rhs=rep.rhs,
        margin=rep.margin,
        tolerance=tol,
        witness=rep.witness,
        samples_checked=rep.samples_checked,
        seed=rep.seed,
        notes=rep.notes,
        details={"F": F, "G": G, "H": H},
    )
