import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borell_lab.errors import ContractError, DimensionError
from borell_lab.fixtures import gaussian_1d
from borell_lab.funcgrid import GridFunction
from borell_lab.inequalities import (
    HypothesisSampler,
    bbl_check,
    borell_conclusion_check,
    borell_hypothesis_check,
    conclusion_exponent,
    nonlinear_check,
    sup_convolution_bbl,
    sup_convolution_nonlinear,
    tensorize_reduce,
)
from borell_lab.means import mean
from borell_lab.transport import CoordinateMap, MeanCombiner

INF = math.inf
SMALL = HypothesisSampler(n_xy=2000, n_scale=8, seed=1)


def indicator(lo, hi, n=201, box=None):
    blo, bhi = box or (lo, hi)
    return GridFunction.from_function(lambda x: np.where((x >= lo - 1e-12) & (x <= hi + 1e-12), 1.0, 0.0), [blo], [bhi], n)


def square_indicator(n=41):
    return GridFunction.from_function(lambda x, y: np.ones_like(x), [0, 0], [1, 1], n)


# sampler ---------------------------------------------------------------------


@pytest.mark.parametrize("kw", [{"n_xy": 0}, {"n_scale": 0}, {"scale_range": (0.0, 1.0)}, {"scale_range": (2.0, 1.0)}])
def test_sampler_validation(kw):
    with pytest.raises(ContractError):
        HypothesisSampler(**kw)


# hypothesis ------------------------------------------------------------------


def test_indicator_hypothesis_holds_in_two_dimensions():
    f = square_indicator()
    rep = borell_hypothesis_check(f, f, f, CoordinateMap.affine(0.5, 2), MeanCombiner(0.5, 0.5), SMALL)
    assert rep.margin >= -1e-12
    assert rep.samples_checked == 2000 * 8


def test_zero_h_violates_hypothesis_with_witness():
    f = gaussian_1d(n=201)
    zero = f.scaled(0.0)
    rep = borell_hypothesis_check(f, f, zero, CoordinateMap.affine(0.5), MeanCombiner(0.0, 0.5), SMALL)
    assert not rep.satisfied
    assert "x=" in rep.witness and "rho=" in rep.witness


def test_log_concave_gaussian_satisfies_hypothesis():
    f = GridFunction.from_function(lambda x: np.exp(-(x**2)), [-5], [5], 1001)
    rep = borell_hypothesis_check(f, f, f, CoordinateMap.affine(0.3), MeanCombiner(0.0, 0.3), SMALL)
    assert rep.margin >= -1e-3


def test_hypothesis_dimension_mismatch():
    f = gaussian_1d(n=51)
    with pytest.raises(DimensionError):
        borell_hypothesis_check(f, f, square_indicator(), CoordinateMap.affine(0.5), MeanCombiner(0.0, 0.5))


def test_hypothesis_is_deterministic_for_a_seed():
    f = gaussian_1d(n=201)
    args = (f, f, f, CoordinateMap.affine(0.5), MeanCombiner(0.0, 0.5), SMALL)
    assert borell_hypothesis_check(*args).row() == borell_hypothesis_check(*args).row()


# conclusion ------------------------------------------------------------------


def test_conclusion_examples():
    f = gaussian_1d(n=401)
    rep = borell_conclusion_check(f, f, f, MeanCombiner(0.0, 0.4))
    assert rep.margin == pytest.approx(0.0, abs=1e-15)
    assert not borell_conclusion_check(f, f, f.scaled(0.0), MeanCombiner(1.0, 0.4)).satisfied


# sup-convolutions ------------------------------------------------------------


def test_bbl_interval_examples():
    one = indicator(0, 1)
    h = sup_convolution_bbl(one, one, INF, 0.5)
    assert h.integrate() == pytest.approx(1.0, rel=1e-9)
    h = sup_convolution_bbl(one, indicator(1, 2), 0.0, 0.5)
    lo, hi = h.support_hull()
    assert (lo[0], hi[0]) == pytest.approx((0.5, 1.5), abs=1e-12)
    assert h.integrate() == pytest.approx(1.0, rel=1e-9)


def test_bbl_gaussian_conclusion_is_tight():
    f, g = gaussian_1d(-1.0), gaussian_1d(1.5)
    for lam in (0.25, 0.5, 0.75):
        rep = bbl_check(f, g, 0.0, lam)
        assert rep.margin >= -1e-4
        h = rep.details["h"]
        c = (1 - lam) * -1.0 + lam * 1.5
        z = h.axes[0]
        want = np.exp(-((z - c) ** 2))
        bulk = want > 1e-9  # nodes below the support floor are not sampled
        assert np.all(h.values[bulk] >= want[bulk] * (1 - 1e-3))


def test_bbl_rejects_small_gamma_and_short_circuits_endpoints():
    f = gaussian_1d(n=101)
    with pytest.raises(ContractError):
        sup_convolution_bbl(f, f, -1.5, 0.5)
    assert np.array_equal(sup_convolution_bbl(f, f.scaled(2.0), 0.0, 0.0).values, f.values)


def test_nonlinear_interval_examples():
    u = indicator(1, 2)
    h = sup_convolution_nonlinear(u, u, [0.0], 0.0, 0.5)
    lo, hi = h.support_hull()
    assert (lo[0], hi[0]) == pytest.approx((1.0, 2.0), abs=1e-9)
    assert nonlinear_check(u, u, [0.0], 0.0, 0.5).margin >= -1e-3
    w = indicator(1, 4, 301)
    h = sup_convolution_nonlinear(w, w, [0.5], 0.0, 0.5)
    lo, hi = h.support_hull()
    assert (lo[0], hi[0]) == pytest.approx((1.0, 4.0), abs=1e-9)
    assert h.integrate() == pytest.approx(3.0, rel=1e-3)


def test_nonlinear_preconditions():
    f = gaussian_1d(n=51)
    with pytest.raises(ContractError):
        sup_convolution_nonlinear(f, f, [0.5], 0.0, 0.5)  # negative coordinates
    u = indicator(1, 2, 51)
    with pytest.raises(ContractError):
        sup_convolution_nonlinear(u, u, [0.5], -0.6, 0.5)
    with pytest.raises(ContractError):
        sup_convolution_nonlinear(u, u, [1.5], 0.0, 0.5)


@pytest.mark.parametrize("gamma", [-1.0, -0.5, 0.0, 0.7, INF])
def test_nonlinear_with_p_one_reproduces_bbl(gamma):
    f = GridFunction.from_function(lambda x: np.exp(-((x - 2) ** 2)), [0], [5], 201)
    g = GridFunction.from_function(lambda x: 1.0 / (1.0 + (x - 3) ** 2), [0], [5], 201)
    a, b = bbl_check(f, g, gamma, 0.3), nonlinear_check(f, g, [1.0], gamma, 0.3)
    assert abs(a.lhs - b.lhs) <= 1e-12 * a.lhs
    assert abs(a.rhs - b.rhs) <= 1e-12 * a.rhs
    assert abs(a.margin - b.margin) <= 1e-12


def _cell(z, lo, step, n):
    return np.clip(np.ceil((z - lo) / step - 0.5), 0, n - 1).astype(int)


@pytest.mark.parametrize("gamma", [0.0, -0.5, 1.0])
def test_sup_convolution_is_minimal(gamma):
    # every positive cell value is attained by a pair mapped into that cell,
    # so lowering it by 5% violates the hypothesis at that pair
    rng = np.random.default_rng(0)
    f = GridFunction(np.array([-1.0]), np.array([1.0]), rng.uniform(0.1, 1.0, 41))
    g = GridFunction(np.array([0.0]), np.array([3.0]), rng.uniform(0.1, 1.0, 61))
    lam = 0.4
    h = sup_convolution_bbl(f, g, gamma, lam)
    x, y = f.axes[0][:, None], g.axes[0][None, :]
    z = (1 - lam) * x + lam * y
    vals = mean(gamma, lam, f.values[:, None], g.values[None, :])
    cells = _cell(z, h.box_min[0], h.step[0], h.values.size)
    best = np.zeros(h.values.size)
    np.maximum.at(best, cells.ravel(), vals.ravel())
    assert np.allclose(h.values, best, rtol=1e-14, atol=0)
    shrunk = h.values.copy()
    for k in np.flatnonzero(h.values > 0)[::7]:
        shrunk[k] = 0.95 * h.values[k]
        witness = np.argwhere(cells == k)
        assert np.any(vals[cells == k] > shrunk[k]), witness
        shrunk[k] = h.values[k]


def test_sup_convolution_two_dimensional_box():
    f = square_indicator(11)
    h = sup_convolution_bbl(f, f, 0.0, 0.5)
    assert h.integrate() == pytest.approx(1.0, rel=1e-9)
    assert np.all(h.values == 1.0)


# exponents -------------------------------------------------------------------


@pytest.mark.parametrize(
    "p, gamma, want",
    [([1.0], 1.0, 0.5), ([0.3], 0.0, 0.0), ([1.0, 1.0], 0.0, 0.0), ([0.0, 0.0], 2.0, 0.0), ([1.0], INF, 1.0), ([1.0, 1.0], -0.5, -INF)],
)
def test_conclusion_exponent_examples(p, gamma, want):
    assert conclusion_exponent(p, gamma) == want


def test_conclusion_exponent_bbl_form():
    for n in (1, 2, 3):
        for gamma in (-1.0 / n + 0.01, 0.2, 3.0):
            assert conclusion_exponent([1.0] * n, gamma) == pytest.approx(gamma / (1 + gamma * n), rel=1e-12)


@pytest.mark.parametrize("p, gamma", [([1.5], 0.0), ([0.5], -0.6), ([0.5, 1.2], 0.0), ([1.0, 1.0], -0.6), ([], 0.0)])
def test_conclusion_exponent_rejects_inadmissible(p, gamma):
    with pytest.raises((ContractError, DimensionError)):
        conclusion_exponent(p, gamma)


@settings(max_examples=200)
@given(
    st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_conclusion_exponent_monotone_in_gamma(p, u, v):
    floor = -p[0] if len(p) == 1 else -1.0 / sum(1.0 / x if x > 0 else INF for x in p)
    span = 10.0
    g1, g2 = sorted((floor + span * u, floor + span * v))
    assert conclusion_exponent(p, g1) <= conclusion_exponent(p, g2) + 1e-12


# tensorization ---------------------------------------------------------------


def test_tensorize_indicator_square():
    f = square_indicator()
    rep = tensorize_reduce(f, f, f, CoordinateMap.affine(0.5, 2), MeanCombiner(0.5, 0.5), SMALL)
    assert rep.margin >= -1e-9


def test_tensorize_product_of_log_concave_factors():
    f = GridFunction.from_function(lambda x, y: np.exp(-(x**2) - 2 * (y - 0.5) ** 2), [-4, -4], [4, 4], 81)
    rep = tensorize_reduce(f, f, f, CoordinateMap.affine(0.5, 2), MeanCombiner(0.0, 0.5), SMALL)
    assert rep.margin >= -1e-3


def test_tensorize_zero_h_violates():
    f = square_indicator()
    rep = tensorize_reduce(f, f, f.scaled(0.0), CoordinateMap.affine(0.5, 2), MeanCombiner(0.5, 0.5), SMALL)
    assert not rep.satisfied


def test_tensorize_needs_two_dimensions():
    f = gaussian_1d(n=51)
    with pytest.raises(DimensionError):
        tensorize_reduce(f, f, f, CoordinateMap.affine(0.5), MeanCombiner(0.0, 0.5))
