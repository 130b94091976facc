import math

import numpy as np
import pytest

from borell_lab.bodies import DirectionGrid, SupportBody, box_body, random_symmetric_polygon, support_of_polytope
from borell_lab.errors import ContractError, DomainError, ValidationError
from borell_lab.fixtures import product_tent, pyramid, rotated_square, square
from borell_lab.funcgrid import GridFunction, superlevel_threshold_values
from borell_lab.measures import (
    DensityMeasure,
    body_coverage,
    equiv_pipeline_check,
    inclusion_chain_check,
    levelset_profile,
    lp_bm_check,
    measure_of_body,
    planar_lp_bm_trial,
)

GRID = DirectionGrid.planar(720)


@pytest.fixture(scope="module")
def lebesgue():
    return DensityMeasure.lebesgue(half_width=4.0, n=401)


@pytest.fixture(scope="module")
def pyr():
    return DensityMeasure(pyramid(half=1.5), 1.0)


def disk(r=1.0):
    return SupportBody(GRID, np.full(GRID.m, r))


# construction ----------------------------------------------------------------


def test_asymmetric_density_rejected():
    psi = GridFunction.from_function(lambda x, y: np.exp(-((x - 0.3) ** 2) - y**2), [-3, -3], [3, 3], 61)
    with pytest.raises(ValidationError):
        DensityMeasure(psi, 0.0)


def test_asymmetric_box_rejected():
    psi = GridFunction.from_function(lambda x, y: np.ones_like(x), [-1, -2], [1, 3], 11)
    with pytest.raises(ValidationError):
        DensityMeasure(psi, 1.0)


def test_declared_alpha_is_validated():
    with pytest.raises(ValidationError):
        DensityMeasure(product_tent(half=1.25, per_unit=32), 1.0)
    mu = DensityMeasure(product_tent(half=1.25, per_unit=32), 0.5)
    assert mu.validation is not None and mu.validation.satisfied


# measure_of_body ---------------------------------------------------------------


def test_unit_square_lebesgue(lebesgue):
    assert measure_of_body(lebesgue, square()) == pytest.approx(4.0, abs=1e-3)


def test_body_absorbing_the_support(pyr):
    big = box_body([1.5, 1.5], GRID)
    assert measure_of_body(pyr, big) == pytest.approx(pyr.density.integrate(), rel=1e-9)


def test_gaussian_on_unit_disk():
    psi = GridFunction.from_function(lambda x, y: np.exp(-(x**2) - y**2), [-3, -3], [3, 3], 601)
    mu = DensityMeasure(psi, 0.0)
    exact = math.pi * (1 - math.exp(-1))  # 2 pi int_0^1 r e^{-r^2} dr
    assert measure_of_body(mu, disk()) == pytest.approx(exact, abs=1e-3)


def test_coverage_requires_the_body_inside_the_grid(pyr):
    with pytest.raises(DomainError):
        measure_of_body(pyr, box_body([2.0, 2.0], GRID))


def test_coverage_is_exact_for_a_grid_aligned_box():
    psi = GridFunction([-2, -2], [2, 2], np.ones((41, 41)))
    cov = body_coverage(psi, box_body([1.0, 1.0], GRID))
    assert cov.sum() == pytest.approx(4.0, rel=1e-12)


# level sets ------------------------------------------------------------------


def test_levelset_profile_constant_density(lebesgue):
    assert levelset_profile(lebesgue, square(), [0.5, 2.0]).tolist() == pytest.approx([4.0, 0.0], abs=1e-3)


def test_levelset_profile_pyramid_closed_form(pyr):
    # {psi >= t} is the square [-(1-t), 1-t]^2
    t = np.array([0.1, 0.25, 0.5, 0.75])
    prof = levelset_profile(pyr, box_body([1.5, 1.5], GRID), t)
    # boundary cells contribute at most perimeter * cell width
    slack = 8 * (1 - t) * pyr.density.step[0]
    assert np.all(np.abs(prof - 4 * (1 - t) ** 2) <= slack)


def test_levelset_profile_rejects_bad_thresholds(pyr):
    with pytest.raises(ContractError):
        levelset_profile(pyr, square(), [0.5, 0.2])
    with pytest.raises(ContractError):
        levelset_profile(pyr, square(), [0.0, 0.5])


def test_layer_cake_reproduces_measure(pyr):
    from borell_lab.measures import _Profile

    K = rotated_square(1.2)
    cov = body_coverage(pyr.density, K)
    t = superlevel_threshold_values(pyr.density, 64)
    total = _Profile(pyr.density.values, cov).layer_cake(t)
    assert total == pytest.approx(measure_of_body(pyr, K, cov), rel=1e-2)


# lp_bm_check ------------------------------------------------------------------


def test_identical_bodies_give_zero_margin(lebesgue):
    K = support_of_polytope(random_symmetric_polygon(4), GRID)
    rep = lp_bm_check(lebesgue, K, K, 0.3, 0.0)
    assert rep.margin == pytest.approx(0.0, abs=1e-12)


def test_lebesgue_dilate_closed_form(lebesgue):
    K, L = square(), box_body([2.0, 2.0], GRID)
    for lam in (0.25, 0.5):
        rep = lp_bm_check(lebesgue, K, L, lam, 0.0)
        assert rep.lhs == pytest.approx(4 * 4**lam, rel=1e-3)
        assert abs(rep.margin) <= 1e-3


def test_exponent_precondition():
    psi = GridFunction.from_function(lambda x, y: 1.0 / (1.0 + x**2 + y**2) ** 2, [-2, -2], [2, 2], 81)
    mu = DensityMeasure(psi, -0.5)
    with pytest.raises(ContractError, match="alpha >= -p/n"):
        lp_bm_check(mu, square(), rotated_square(), 0.5, 0.5)


def test_alpha_above_one_is_tagged(lebesgue):
    rep = lp_bm_check(lebesgue, square(), rotated_square(), 0.5, 0.5)
    assert any("outside the proven range" in n for n in rep.notes)


def test_rhs_monotone_in_p(pyr):
    K, L = square(), rotated_square(1.2)
    rhs = [lp_bm_check(pyr, K, L, 0.4, p).rhs for p in (0.0, 0.25, 0.5, 1.0)]
    assert all(a <= b + 1e-15 for a, b in zip(rhs, rhs[1:]))


@pytest.mark.parametrize("trial", range(10))
def test_pyramid_lp_bm_random_polygons(pyr, trial):
    K = support_of_polytope(0.6 * random_symmetric_polygon([trial, 0]), GRID)
    L = support_of_polytope(0.6 * random_symmetric_polygon([trial, 1]), GRID)
    assert lp_bm_check(pyr, K, L, 0.5, 1.0).margin >= -1e-3


# pipeline ----------------------------------------------------------------------


def test_pipeline_identical_bodies(pyr):
    K = rotated_square(1.2)
    rep = equiv_pipeline_check(pyr, K, K, 0.5, 0.5)
    diag = np.diag(rep.details["pointwise_margins"])
    assert np.all(np.abs(diag[np.isfinite(diag)]) <= 1e-12)


def test_pipeline_matches_lp_bm(pyr):
    K, L = square(), rotated_square(1.2)
    for p in (0.0, 0.5, 1.0):
        a, b = lp_bm_check(pyr, K, L, 0.5, p), equiv_pipeline_check(pyr, K, L, 0.5, p)
        assert b.lhs == pytest.approx(a.lhs, rel=1e-2)
        assert b.rhs == pytest.approx(a.rhs, rel=1e-2)
        assert b.details["pointwise_margin"] >= -1e-3
        assert b.satisfied


def test_pipeline_lebesgue_dilate():
    mu = DensityMeasure.lebesgue(half_width=4.0, n=401, alpha=1.0)
    K = square()
    a, b = lp_bm_check(mu, K, K.scaled(2.0), 0.5, 0.0), equiv_pipeline_check(mu, K, K.scaled(2.0), 0.5, 0.0)
    assert b.lhs == pytest.approx(a.lhs, rel=1e-2)
    assert b.rhs == pytest.approx(a.rhs, rel=1e-2)


# inclusion chain --------------------------------------------------------------


@pytest.mark.parametrize("p", [1.0, 0.5, 0.0])
def test_inclusion_chain_squares(p):
    rep = inclusion_chain_check(square(), rotated_square(1.2), 0.5, p, n_points=10_000)
    assert rep.lhs == 0 and rep.satisfied
    assert rep.samples_checked >= 10_000


def test_inclusion_chain_dilate():
    assert inclusion_chain_check(square(), square().scaled(3.0), 0.3, 0.0).lhs == 0


def test_inclusion_chain_rejects_large_p():
    with pytest.raises(ContractError):
        inclusion_chain_check(square(), square(), 0.5, 1.5)


# planar sweep -------------------------------------------------------------------


def test_planar_trial_reports_bias():
    rep = planar_lp_bm_trial(0, 3, 0.5, 0.0)
    assert rep.tolerance >= rep.details["bias"]
    assert rep.margin >= -rep.tolerance
    assert len(rep.details["areas"]) == 3
    assert rep.details["areas"][0] >= rep.details["areas"][1] >= rep.details["areas"][2]


def test_planar_trial_aligned_polygons_are_bias_free():
    rep = planar_lp_bm_trial(0, 3, 0.5, 0.0, aligned=True)
    assert rep.details["bias"] <= 1e-12 and rep.details["bias_fine"] <= 1e-12
    assert rep.satisfied
