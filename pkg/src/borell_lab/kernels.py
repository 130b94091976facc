"""Inner loops: sup-convolution scatter-max and halfspace membership.

Each kernel has a numba implementation (``*_numba``) and a pure-numpy one
(``*_numpy``).  The public names dispatch on :data:`borell_lab._accel.USE_NUMBA`.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit
from .means import mean

# Pairs processed per chunk in the numpy fallbacks.
_CHUNK = 1 << 21


@njit
def _rescale(m, log_m, r):
    if abs(r) > 700.0:
        return math.exp(log_m + r)
    return m * math.exp(r)


@njit
def _mean_scalar(s, lam, a, b):
    # Same conventions and evaluation scheme as means.mean.
    if lam == 0.0:
        return a
    if lam == 1.0:
        return b
    if s == -math.inf:
        return min(a, b)
    if s == math.inf:
        return max(a, b)
    lo = min(a, b)
    hi = max(a, b)
    if s <= 0.0:
        if lo <= 0.0:
            return 0.0
    elif hi <= 0.0:
        return 0.0
    if s == 0.0 or (abs(s) < 1e-9 and lo > 0.0):
        log_m = math.log(hi)
        la = math.log(a) - log_m
        lb = math.log(b) - log_m
        mu = (1.0 - lam) * la + lam * lb
        if s != 0.0:
            mu += 0.5 * s * ((1.0 - lam) * la * la + lam * lb * lb - mu * mu)
        return _rescale(hi, log_m, mu)
    # relative to the dominant weighted term, as in means._finite_mean
    lw_a = math.log1p(-lam)
    lw_b = math.log(lam)
    log_a = math.log(a) if a > 0.0 else -math.inf
    log_b = math.log(b) if b > 0.0 else -math.inf
    if lw_a + s * log_a >= lw_b + s * log_b:
        m, log_m, w_j, lw_j, lw_k = a, log_a, lam, lw_b, lw_a
        u = s * (log_b - log_a) if b > 0.0 else -math.inf
    else:
        m, log_m, w_j, lw_j, lw_k = b, log_b, 1.0 - lam, lw_a, lw_b
        u = s * (log_a - log_b) if a > 0.0 else -math.inf
    z = w_j * math.expm1(u) if u <= 1.0 else math.exp(lw_j + u) - w_j
    if abs(z) < 0.5:
        log_sum = math.log1p(z)
    else:
        hi_w = max(lw_k, lw_j + u)
        log_sum = hi_w + math.log1p(math.exp(min(lw_k, lw_j + u) - hi_w))
    return _rescale(m, log_m, log_sum / s)


@njit
def _sup_convolution_numba(xs, fv, ys, gv, p, lam, gamma, hmin, hstep, hshape):
    dim = xs.shape[1]
    total = 1
    for k in range(dim):
        total *= hshape[k]
    h = np.zeros(total)
    for i in range(xs.shape[0]):
        for j in range(ys.shape[0]):
            val = _mean_scalar(gamma, lam, fv[i], gv[j])
            flat = 0
            for k in range(dim):
                if p[k] == 1.0:
                    z = (1.0 - lam) * xs[i, k] + lam * ys[j, k]
                else:
                    z = _mean_scalar(p[k], lam, xs[i, k], ys[j, k])
                c = math.ceil((z - hmin[k]) / hstep[k] - 0.5)
                if c < 0:
                    c = 0
                elif c > hshape[k] - 1:
                    c = hshape[k] - 1
                flat = flat * hshape[k] + c
            if val > h[flat]:
                h[flat] = val
    return h


def _sup_convolution_numpy(xs, fv, ys, gv, p, lam, gamma, hmin, hstep, hshape):
    dim = xs.shape[1]
    h = np.zeros(int(np.prod(hshape)))
    rows = max(1, _CHUNK // max(1, len(ys)))
    for start in range(0, len(xs), rows):
        xc = xs[start : start + rows]
        fc = fv[start : start + rows]
        vals = mean(gamma, lam, fc[:, None], gv[None, :]).ravel()
        flat = np.zeros(vals.shape, dtype=np.int64)
        for k in range(dim):
            a = xc[:, k][:, None]
            b = ys[:, k][None, :]
            if p[k] == 1.0:
                z = (1.0 - lam) * a + lam * b
            else:
                z = mean(p[k], lam, np.broadcast_to(a, (len(a), len(ys))), b)
            c = np.ceil((z.ravel() - hmin[k]) / hstep[k] - 0.5).astype(np.int64)
            np.clip(c, 0, hshape[k] - 1, out=c)
            flat = flat * hshape[k] + c
        np.maximum.at(h, flat, vals)
    return h


@njit
def _halfspace_inside_numba(points, dirs, bounds, tol):
    n = points.shape[0]
    m = dirs.shape[0]
    dim = points.shape[1]
    out = np.ones(n, dtype=np.bool_)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(dim):
                s += points[i, k] * dirs[j, k]
            if s > bounds[j] + tol:
                out[i] = False
                break
    return out


def _halfspace_inside_numpy(points, dirs, bounds, tol):
    out = np.empty(len(points), dtype=bool)
    rows = max(1, _CHUNK // max(1, len(dirs)))
    for start in range(0, len(points), rows):
        proj = points[start : start + rows] @ dirs.T
        out[start : start + rows] = np.all(proj <= bounds + tol, axis=1)
    return out


def _prep_sup(xs, fv, ys, gv, p, hmin, hstep, hshape):
    return (
        np.ascontiguousarray(xs, dtype=float),
        np.ascontiguousarray(fv, dtype=float),
        np.ascontiguousarray(ys, dtype=float),
        np.ascontiguousarray(gv, dtype=float),
        np.ascontiguousarray(p, dtype=float),
        np.ascontiguousarray(hmin, dtype=float),
        np.ascontiguousarray(hstep, dtype=float),
        np.ascontiguousarray(hshape, dtype=np.int64),
    )


def sup_convolution(xs, fv, ys, gv, p, lam, gamma, hmin, hstep, hshape, use_numba=None):
    """Scatter-max of ``M_gamma^lam(f_i, g_j)`` into the cell holding ``M_p^lam(x_i, y_j)``.

    Cells are centred on the nodes ``hmin + k * hstep``.  A point on a cell
    boundary goes to the lower index; points past the ends are clamped into
    the boundary cells.  Returns the flattened (row-major) cell maxima.
    """
    xs, fv, ys, gv, p, hmin, hstep, hshape = _prep_sup(xs, fv, ys, gv, p, hmin, hstep, hshape)
    use = USE_NUMBA if use_numba is None else use_numba
    fn = _sup_convolution_numba if use else _sup_convolution_numpy
    return fn(xs, fv, ys, gv, p, float(lam), float(gamma), hmin, hstep, hshape)


def halfspace_inside(points, dirs, bounds, tol=1e-12, use_numba=None) -> np.ndarray:
    """``True`` for points with ``<x, u_j> <= bounds_j + tol`` for every direction."""
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    dirs = np.ascontiguousarray(dirs, dtype=float)
    bounds = np.ascontiguousarray(bounds, dtype=float)
    use = USE_NUMBA if use_numba is None else use_numba
    fn = _halfspace_inside_numba if use else _halfspace_inside_numpy
    return fn(points, dirs, bounds, float(tol))
