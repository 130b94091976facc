import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from borell_lab.errors import ContractError, DimensionError
from borell_lab.means import (
    format_ext,
    holder_check,
    holder_exponent,
    holder_margins,
    mean,
    mean_vector,
    parse_ext,
    reciprocal,
    validate_holder_exponents,
)

INF = math.inf
positive = st.floats(0.1, 10.0)
weights = st.floats(0.0, 1.0)
exponents = st.one_of(st.floats(-20, 20), st.sampled_from([-INF, INF, 0.0]))


@pytest.mark.parametrize(
    "s, lam, a, b, want",
    [(0, 0.5, 4, 9, 6), (-INF, 0.3, 2, 5, 2), (2, 0.5, 1, 7, 5), (-1, 0.5, 0, 3, 0), (INF, 0.3, 2, 5, 5)],
)
def test_mean_examples(s, lam, a, b, want):
    assert mean(s, lam, a, b) == pytest.approx(want, rel=1e-14)


def test_mean_zero_argument_conventions():
    assert mean(0.0, 0.5, 0.0, 3.0) == 0.0
    assert mean(1.0, 0.25, 0.0, 8.0) == pytest.approx(2.0)
    assert mean(2.0, 0.5, 0.0, 2.0) == pytest.approx(math.sqrt(2.0))
    assert mean(-3.0, 0.5, 5.0, 0.0) == 0.0


def test_endpoint_weights_return_arguments_exactly():
    assert mean(0.37, 0.0, 3.0, 11.0) == 3.0
    assert mean(-5.0, 1.0, 3.0, 11.0) == 11.0


@pytest.mark.parametrize("a", [-1.0, math.inf, math.nan])
def test_mean_rejects_arguments_outside_the_domain(a):
    with pytest.raises(ContractError):
        mean(1.0, 0.5, a, 2.0)
    with pytest.raises(ContractError):
        mean(1.0, 0.5, np.array([1.0, a]), np.array([2.0, 2.0]))


def test_scalar_and_array_paths_agree():
    vals = [0.0, 5e-324, 1e-300, 0.25, 1.0, 7.0, 1e300]
    for s in (-INF, -50.0, -1.0, -1e-12, 0.0, 1e-12, 0.5, 3.0, INF):
        for lam in (0.0, 1e-10, 0.3, 1 - 1e-12, 1.0):
            a, b = np.meshgrid(vals, vals)
            arr = mean(s, lam, a.ravel(), b.ravel())
            sca = [mean(s, lam, float(x), float(y)) for x, y in zip(a.ravel(), b.ravel())]
            np.testing.assert_allclose(sca, arr, rtol=1e-13, atol=0)


def test_mean_is_vectorized():
    out = mean(0.0, 0.5, np.array([4.0, 1.0]), np.array([9.0, 1.0]))
    np.testing.assert_allclose(out, [6.0, 1.0])


def test_near_zero_exponent_is_stable():
    assert mean(1e-12, 0.5, 4.0, 9.0) == pytest.approx(6.0, rel=1e-10)
    assert mean(-1e-12, 0.5, 4.0, 9.0) == pytest.approx(6.0, rel=1e-10)


@pytest.mark.parametrize(
    "p, lam, x, y, want",
    [((0, 1), 0.5, (4, 0), (9, 2), (6, 1)), ((0, 0), 0.0, (3, 5), (8, 8), (3, 5)), ((1, 1), 0.25, (4, 4), (8, 8), (5, 5))],
)
def test_mean_vector_examples(p, lam, x, y, want):
    np.testing.assert_allclose(mean_vector(p, lam, x, y), want)


def test_mean_vector_length_mismatch():
    with pytest.raises(DimensionError):
        mean_vector([0, 1], 0.5, [1, 2, 3], [1, 2, 3])


@given(exponents, weights, positive, positive, st.floats(0.01, 100.0))
def test_homogeneity(s, lam, a, b, t):
    assert mean(s, lam, t * a, t * b) == pytest.approx(t * mean(s, lam, a, b), rel=1e-12)


@given(weights, positive, positive, st.lists(st.floats(-50, 50), min_size=2, max_size=8))
def test_monotone_in_exponent(lam, a, b, chain):
    chain = sorted(set(chain)) + [INF]
    chain = [-INF] + chain
    values = [mean(s, lam, a, b) for s in chain]
    for lo, hi in zip(values, values[1:]):
        assert hi >= lo * (1 - 1e-12)


@given(weights, positive, positive, positive)
def test_monotone_in_arguments(lam, a, b, da):
    for s in (-2.0, 0.0, 0.5, 3.0):
        assert mean(s, lam, a + da, b) >= mean(s, lam, a, b) * (1 - 1e-12)


@given(weights, positive, positive)
def test_limit_at_zero_exponent(lam, a, b):
    g = mean(0.0, lam, a, b)
    for s in (1e-6, -1e-6):
        assert abs(mean(s, lam, a, b) - g) <= 1e-4 * g


def test_parse_and_format_extended_reals():
    assert parse_ext("inf") == INF and parse_ext("-inf") == -INF and parse_ext("+inf") == INF
    assert parse_ext("0.25") == 0.25
    with pytest.raises(ValueError):
        parse_ext("nan")
    assert format_ext(-INF) == "-inf" and format_ext(INF) == "inf"
    assert parse_ext(format_ext(0.1)) == 0.1


def test_reciprocal_conventions():
    assert reciprocal(0.0) == INF and reciprocal(INF) == 0.0 and reciprocal(-INF) == 0.0
    assert reciprocal(4.0) == 0.25


def test_holder_examples():
    r = holder_check(1, 2, 2, 0.5, 1, 1, 1, 1)
    assert r.lhs == 1 and r.rhs == 1 and r.margin == 0 and r.satisfied
    assert holder_check(0, 0, 0, 0.4, 2, 3, 5, 7).margin == pytest.approx(0.0, abs=1e-12)


def test_holder_grid_oracle():
    vals = np.linspace(0.1, 10, 12)
    a, b, c, d = (m.ravel() for m in np.meshgrid(vals, vals, vals, vals, indexing="ij"))
    margins = holder_margins(0.5, 1, 1, 0.3, a, b, c, d)
    assert margins.min() >= -1e-12


def test_holder_rejects_inconsistent_triples():
    with pytest.raises(ContractError):
        holder_check(1, 1, 1, 0.5, 1, 2, 3, 4)
    with pytest.raises(ContractError):
        validate_holder_exponents(-1.0, -0.5, 0.25)  # beta + gamma < 0
    with pytest.raises(ContractError):
        validate_holder_exponents(0.0, INF, -INF)


def test_holder_exponent_limits():
    assert holder_exponent(1, 1) == 0.5
    assert holder_exponent(INF, 2) == 2
    assert holder_exponent(0, 3) == 0
    assert holder_exponent(2, -2) == -INF
    assert holder_exponent(0.0, -0.0) == 0


@given(
    st.sampled_from([(1, 1), (2, 2), (0.5, 3), (INF, 1), (INF, INF), (0, 5), (2, -1), (-1, INF), (3, -3)]),
    weights,
    st.lists(st.floats(0.0, 10.0), min_size=4, max_size=4),
)
def test_holder_never_violated(pair, lam, abcd):
    beta, gamma = pair
    alpha = holder_exponent(beta, gamma)
    r = holder_check(alpha, beta, gamma, lam, *abcd)
    assert r.margin >= -1e-10


EXTREME_VALUES = [0.0, 5e-324, 1e-300, 0.25, 1.0, 7.0, 1e300]
EXTREME_EXPONENTS = [-INF, -50, -4, -1, -1e-12, 0, 1e-12, 0.5, 1, 3, INF]
EXTREME_WEIGHTS = [5e-324, 1e-10, 0.3, 0.5, 1 - 1e-12]


def _oracle(s, lam, a, b):
    mp = pytest.importorskip("mpmath")
    with mp.workdps(50):
        a, b, lam = mp.mpf(a), mp.mpf(b), mp.mpf(lam)
        if s in (-INF, INF):
            return min(a, b) if s < 0 else max(a, b)
        if s <= 0 and min(a, b) == 0:
            return mp.mpf(0)
        if s == 0:
            return a ** (1 - lam) * b**lam
        return ((1 - lam) * a ** mp.mpf(s) + lam * b ** mp.mpf(s)) ** (1 / mp.mpf(s))


@pytest.mark.parametrize("s", EXTREME_EXPONENTS)
def test_extreme_arguments_match_high_precision(s):
    from borell_lab.kernels import _mean_scalar

    for lam in EXTREME_WEIGHTS:
        for a in EXTREME_VALUES:
            for b in EXTREME_VALUES:
                want = _oracle(s, lam, a, b)
                for got in (mean(s, lam, a, b), _mean_scalar(s, lam, a, b)):
                    if want == 0:
                        assert got == 0
                    elif float(want) >= 2.3e-308:  # subnormal results carry fewer digits
                        assert got == pytest.approx(float(want), rel=1e-12), (s, lam, a, b)
