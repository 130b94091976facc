"""Weighted power means over the extended reals and the generalized Hölder inequality.

Exponents (``s``, ``p``, ``gamma``, ``alpha``) are plain Python floats; the
two infinite values are ``math.inf`` and ``-math.inf``.  NaN is rejected
everywhere.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .errors import ContractError, DimensionError
from .report import CheckReport

INF = math.inf

# Tolerance on 1/beta + 1/gamma - 1/alpha when validating Hölder triples.
HOLDER_EXPONENT_TOL = 1e-9

# Below this |s| the power mean is evaluated by its expansion around s = 0.
SMALL_EXPONENT = 1e-9


def parse_ext(text: str | float) -> float:
    """Parse an extended real: ``"inf"``, ``"-inf"``, ``"+inf"`` or a decimal."""
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        t = text.strip().lower()
        if t in {"inf", "+inf", "infinity", "+infinity"}:
            value = INF
        elif t in {"-inf", "-infinity"}:
            value = -INF
        else:
            try:
                value = float(t)
            except ValueError:
                raise ContractError(f"not an extended real: {text!r}") from None
    if math.isnan(value):
        raise ContractError("NaN is not an extended real")
    return value


def format_ext(value: float) -> str:
    if value == INF:
        return "inf"
    if value == -INF:
        return "-inf"
    return repr(float(value))


def reciprocal(x: float) -> float:
    """1/x with the conventions 1/0 = +inf and 1/(+-inf) = 0."""
    if x == 0:
        return INF
    if math.isinf(x):
        return 0.0
    return 1.0 / x


def check_weight(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ContractError(f"weight lambda must lie in [0, 1], got {lam}")
    return lam


def _check_exponent(s: float) -> float:
    s = float(s)
    if math.isnan(s):
        raise ContractError("exponent is NaN")
    return s


def mean(s: float, lam: float, a, b):
    """Weighted power mean ``M_s^lam(a, b)``.

    Works elementwise on arrays (``s`` and ``lam`` are scalars) and returns a
    float when both ``a`` and ``b`` are scalars.

    Conventions: ``s = 0`` is the weighted geometric mean, ``s = -inf`` the
    minimum, ``s = +inf`` the maximum; for ``s <= 0`` a zero argument gives 0;
    for ``s > 0`` and ``a = 0`` the value is ``lam**(1/s) * b``.  ``lam = 0``
    and ``lam = 1`` return ``a`` and ``b`` unchanged.

    The finite case is computed relative to the dominant weighted term (see
    ``_finite_mean``), so nothing overflows and the value stays within
    ``[min, max]`` even for extreme weights.  For ``|s| < SMALL_EXPONENT``
    a second-order expansion around the geometric mean is used.
    """
    s = _check_exponent(s)
    lam = check_weight(lam)
    if isinstance(a, (float, int)) and isinstance(b, (float, int)):
        if not (0 <= a < INF and 0 <= b < INF):
            raise ContractError("power means are defined for finite non-negative arguments")
        return _scalar_kernel()(s, lam, float(a), float(b))
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if not (np.all((a_arr >= 0) & (a_arr < INF)) and np.all((b_arr >= 0) & (b_arr < INF))):
        raise ContractError("power means are defined for finite non-negative arguments")
    out = _mean_array(s, lam, a_arr, b_arr)
    if a_arr.ndim == 0 and b_arr.ndim == 0:
        return float(out)
    return out


def _scalar_kernel():
    # kernels imports this module, so resolve the compiled scalar lazily
    from . import _accel, kernels

    return kernels._mean_scalar if _accel.USE_NUMBA else kernels._mean_scalar.py_func


def _mean_array(s: float, lam: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.broadcast_arrays(a, b)
    if lam == 0.0:
        return np.array(a, dtype=float, copy=True)
    if lam == 1.0:
        return np.array(b, dtype=float, copy=True)
    if s == -INF:
        return np.minimum(a, b)
    if s == INF:
        return np.maximum(a, b)

    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    out = np.zeros(a.shape, dtype=float)
    if s <= 0:
        live = lo > 0
    else:
        live = hi > 0
    if not np.any(live):
        return out
    al, bl = a[live], b[live]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        if s == 0.0 or abs(s) < SMALL_EXPONENT:
            # log M = E log x + s Var(log x) / 2, relative to the larger argument
            m = hi[live]
            log_m = np.log(m)
            la, lb = np.log(al) - log_m, np.log(bl) - log_m
            mu = (1.0 - lam) * la + lam * lb
            if s != 0.0:
                mu = mu + 0.5 * s * ((1.0 - lam) * la**2 + lam * lb**2 - mu**2)
            val = _rescale(m, log_m, mu)
            zero = (al == 0) | (bl == 0)
            if s > 0 and np.any(zero):
                # the expansion does not apply: M = w^(1/s) x
                w = np.where(al[zero] == 0, math.log(lam), math.log1p(-lam))
                val[zero] = np.exp(w / s) * np.maximum(al[zero], bl[zero])
        else:
            val = _finite_mean(s, lam, al, bl)
    out[live] = val
    return out


def _rescale(m: np.ndarray, log_m: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``m * exp(r)``, recombined in the log domain when ``exp(r)`` leaves the normal range."""
    far = np.abs(r) > 700.0
    return np.where(far, np.exp(log_m + r), m * np.exp(np.where(far, 0.0, r)))


def _finite_mean(s: float, lam: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(w_a a^s + w_b b^s)^(1/s)`` relative to the dominant weighted term.

    With ``k`` the term maximising ``w x^s`` and ``u = s log(x_j / x_k)``,
    ``M = x_k exp(log(w_k + w_j e^u) / s)``.  The sum lies in ``[w_k, 2 w_k]``
    and is formed in logs, so tiny weights and extreme ratios are safe; when
    it is near 1 it is taken as ``log1p(w_j expm1(u))`` instead.
    """
    lw_a, lw_b = math.log1p(-lam), math.log(lam)
    log_a, log_b = np.log(a), np.log(b)
    a_dom = lw_a + s * log_a >= lw_b + s * log_b
    m = np.where(a_dom, a, b)
    log_m = np.where(a_dom, log_a, log_b)
    u = s * (np.where(a_dom, log_b, log_a) - log_m)
    u = np.where(np.isnan(u), -np.inf, u)
    w_j = np.where(a_dom, lam, 1.0 - lam)
    lw_j = np.where(a_dom, lw_b, lw_a)
    lw_k = np.where(a_dom, lw_a, lw_b)
    z = np.where(u <= 1.0, w_j * np.expm1(np.minimum(u, 1.0)), np.exp(lw_j + u) - w_j)
    log_sum = np.where(np.abs(z) < 0.5, np.log1p(z), np.logaddexp(lw_k, lw_j + u))
    return _rescale(m, log_m, log_sum / s)


def mean_vector(p: Sequence[float], lam: float, x, y) -> np.ndarray:
    """Coordinatewise means ``(M_{p_1}(x_1, y_1), ..., M_{p_n}(x_n, y_n))``."""
    p = [_check_exponent(v) for v in p]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(p) < 1:
        raise DimensionError("exponent vector must be non-empty")
    if x.shape != y.shape or x.shape[-1] != len(p):
        raise DimensionError(
            f"length mismatch: p has {len(p)} entries, x {x.shape}, y {y.shape}"
        )
    cols = [mean(pk, lam, x[..., k], y[..., k]) for k, pk in enumerate(p)]
    return np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)


def holder_exponent(beta: float, gamma: float) -> float:
    """Canonical alpha with 1/alpha = 1/beta + 1/gamma for an admissible pair.

    ``beta = -gamma`` finite and nonzero gives ``-inf``: the only infinite
    choice for which the inequality holds.
    """
    beta, gamma = _check_exponent(beta), _check_exponent(gamma)
    _check_pair(beta, gamma)
    if math.isfinite(beta) and math.isfinite(gamma) and beta + gamma == 0 and beta != 0:
        return -INF
    return reciprocal(reciprocal(beta) + reciprocal(gamma))


def _check_pair(beta: float, gamma: float) -> None:
    if {beta, gamma} == {INF, -INF}:
        raise ContractError("beta + gamma is undefined for beta, gamma = -inf, +inf")
    if beta + gamma < 0:
        raise ContractError(f"beta + gamma must be >= 0, got {beta} + {gamma}")


def validate_holder_exponents(alpha: float, beta: float, gamma: float) -> None:
    alpha, beta, gamma = (_check_exponent(v) for v in (alpha, beta, gamma))
    _check_pair(beta, gamma)
    rsum = reciprocal(beta) + reciprocal(gamma)
    ra = reciprocal(alpha)
    if math.isinf(rsum) or math.isinf(ra):
        if not (math.isinf(rsum) and math.isinf(ra)):
            raise ContractError(
                f"1/beta + 1/gamma = {rsum} does not match 1/alpha = {ra}"
            )
        return
    if abs(rsum - ra) > HOLDER_EXPONENT_TOL:
        raise ContractError(f"1/beta + 1/gamma = {rsum} does not match 1/alpha = {ra}")
    # 1/alpha = 0 leaves the sign of alpha open; with beta = -gamma only
    # alpha = -inf is valid.
    if alpha == INF and math.isfinite(beta) and math.isfinite(gamma):
        raise ContractError("beta + gamma = 0 with finite exponents requires alpha = -inf")


def holder_check(
    alpha: float,
    beta: float,
    gamma: float,
    lam: float,
    a: float,
    b: float,
    c: float,
    d: float,
    tol: float = 1e-10,
) -> CheckReport:
    """Check ``M_alpha(ac, bd) <= M_beta(a, b) * M_gamma(c, d)``.

    The margin is ``rhs - lhs`` (absolute).
    """
    validate_holder_exponents(alpha, beta, gamma)
    lhs = mean(alpha, lam, a * c, b * d)
    rhs = mean(beta, lam, a, b) * mean(gamma, lam, c, d)
    return CheckReport(
        check="holder",
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        tolerance=tol,
        witness=f"a={a!r};b={b!r};c={c!r};d={d!r};lambda={lam!r}",
    )


def holder_margins(alpha, beta, gamma, lam, a, b, c, d) -> np.ndarray:
    """Vectorized ``rhs - lhs`` of the Hölder inequality for array arguments."""
    validate_holder_exponents(alpha, beta, gamma)
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    lhs = mean(alpha, lam, a * c, b * d)
    return mean(beta, lam, a, b) * mean(gamma, lam, c, d) - lhs
