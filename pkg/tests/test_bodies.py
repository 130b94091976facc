import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borell_lab.bodies import (
    DirectionGrid,
    Polygon2D,
    SupportBody,
    box_body,
    halfplane_intersection,
    mc_volume,
    membership,
    p_combination,
    polygon_area,
    random_aligned_polygon,
    random_symmetric_polygon,
    regular_polygon,
    support_of_polytope,
    wulff_polygon,
)
from borell_lab.errors import DegeneracyError, DimensionError, ValidationError

SQUARE = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


def test_planar_grid_is_exact_and_closed_under_negation():
    g = DirectionGrid.planar(720)
    assert np.allclose(np.linalg.norm(g.directions, axis=1), 1.0, atol=1e-12)
    assert np.array_equal(g.directions[g.antipode], -g.directions)
    theta = np.arctan2(g.directions[:5, 1], g.directions[:5, 0])
    assert np.allclose(theta, 2 * np.pi * np.arange(5) / 720)


@pytest.mark.parametrize("m", [3, 7, 2])
def test_planar_grid_needs_even_m(m):
    with pytest.raises(ValidationError):
        DirectionGrid.planar(m)


def test_random_grid_is_seeded_and_symmetric():
    a, b = DirectionGrid.random(3, 400, seed=5), DirectionGrid.random(3, 400, seed=5)
    assert np.array_equal(a.directions, b.directions)
    assert np.array_equal(a.directions[a.antipode], -a.directions)


def test_square_support_is_l1_norm_of_direction():
    g = DirectionGrid.planar(360)
    K = support_of_polytope(SQUARE, g)
    assert np.allclose(K.values, np.abs(g.directions).sum(axis=1), atol=1e-12)


def test_hexagon_support_at_first_axis():
    K = support_of_polytope(regular_polygon(6), DirectionGrid.planar(360))
    assert K.values[0] == pytest.approx(1.0, abs=1e-12)


def test_degenerate_and_asymmetric_vertex_sets_rejected():
    g = DirectionGrid.planar(16)
    with pytest.raises(ValidationError):
        support_of_polytope([[1.0, 0.0], [-1.0, 0.0]], g)
    with pytest.raises(ValidationError):
        support_of_polytope([[1.0, 0.0], [0.0, 1.0], [-1.0, -0.5]], g)


def test_support_body_validation():
    g = DirectionGrid.planar(8)
    with pytest.raises(ValidationError):
        SupportBody(g, np.r_[np.ones(7), 0.0])
    with pytest.raises(ValidationError):
        SupportBody(g, np.r_[2.0, np.ones(7)])
    with pytest.raises(DimensionError):
        SupportBody(g, np.ones(5))


def test_p_combination_examples():
    g = DirectionGrid.planar(720)
    K, L = box_body([1, 1], g), box_body([2, 2], g)
    assert np.allclose(p_combination(0.3, 0.0, K, K).values, K.values, rtol=1e-14)
    assert np.allclose(p_combination(0.3, 0.0, K, L).values, K.values * 2**0.3, rtol=1e-12)
    assert np.allclose(p_combination(0.3, 1.0, K, L).values, 0.7 * K.values + 0.3 * L.values, rtol=1e-14)


def test_p_combination_rejects_mismatch_and_bad_p():
    K = box_body([1, 1], DirectionGrid.planar(16))
    L = box_body([1, 1], DirectionGrid.planar(32))
    with pytest.raises(DimensionError):
        p_combination(0.5, 0.0, K, L)
    with pytest.raises(Exception):
        p_combination(0.5, 1.5, K, K)


def test_wulff_reconstructs_square_from_axes_and_diagonals():
    B = SupportBody(DirectionGrid.planar(8), [1, math.sqrt(2), 1, math.sqrt(2)] * 2)
    v = wulff_polygon(B).vertices
    assert sorted(map(tuple, np.round(v, 12))) == sorted(map(tuple, SQUARE))


def test_wulff_disk_and_axis_square():
    disk = SupportBody(DirectionGrid.planar(360), np.ones(360))
    # circumscribed 360-gon: m tan(pi/m)
    assert polygon_area(disk.polygon) == pytest.approx(360 * math.tan(math.pi / 360), rel=1e-12)
    assert abs(polygon_area(disk.polygon) - math.pi) < 1e-3
    assert polygon_area(SupportBody(DirectionGrid.planar(4), np.ones(4)).polygon) == pytest.approx(4.0)


def test_wulff_polygon_is_centrally_symmetric():
    B = support_of_polytope(random_symmetric_polygon(3), DirectionGrid.planar(720))
    v = B.polygon.vertices
    for p in v:
        assert np.min(np.linalg.norm(v + p, axis=1)) < 1e-9


def test_polygon_area_examples():
    assert polygon_area(Polygon2D(SQUARE)) == 4.0
    assert polygon_area(Polygon2D(np.array([[0.0, 0], [1, 0], [0, 1]]))) == 0.5
    assert polygon_area(Polygon2D(regular_polygon(6))) == pytest.approx(3 * math.sqrt(3) / 2, rel=1e-14)


def test_polygon_rejects_clockwise_order():
    with pytest.raises(ValidationError):
        Polygon2D(SQUARE[::-1])


def test_halfplane_intersection_unbounded_raises():
    with pytest.raises(DegeneracyError):
        halfplane_intersection([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0])


def test_membership_examples():
    K = box_body([1, 1], DirectionGrid.planar(720))
    assert membership([0.0, 0.0], K)
    assert not membership([2.0, 0.0], K)
    assert membership([1.0, 0.3], K)
    assert membership(np.array([[0.0, 0.0], [2.0, 0.0]]), K).tolist() == [True, False]


def test_mc_volume_square_and_determinism():
    K = box_body([1, 1], DirectionGrid.planar(720))
    est, err = mc_volume(K, 10**6, seed=3)
    assert abs(est - 4.0) <= 3 * err + 1e-12
    assert mc_volume(K, 10**5, seed=3) == mc_volume(K, 10**5, seed=3)


def test_mc_volume_independent_of_workers():
    B = SupportBody(DirectionGrid.planar(64), np.ones(64))
    assert mc_volume(B, 200_000, seed=1, workers=1) == mc_volume(B, 200_000, seed=1, workers=4)


@pytest.mark.slow
def test_mc_volume_unit_ball_in_three_dimensions():
    grid = DirectionGrid.random(3, 2000, seed=0)
    B = SupportBody(grid, np.ones(grid.m))
    est, err = mc_volume(B, 10**6, seed=0)
    exact = 4 * math.pi / 3
    assert est >= exact - 3 * err
    assert abs(est - exact) <= 3 * err + 0.02 * exact


def test_mc_volume_needs_samples():
    with pytest.raises(Exception):
        mc_volume(box_body([1, 1], DirectionGrid.planar(8)), 10)


def test_three_dimensional_half_widths_by_linear_programming():
    exact = np.array([1.0, 2.0, 0.5])
    coarse = box_body(exact, DirectionGrid.random(3, 500, seed=2)).half_widths
    fine = box_body(exact, DirectionGrid.random(3, 16000, seed=2)).half_widths
    # a finite grid cuts out a superset, and the excess shrinks with density
    assert np.all(coarse >= exact - 1e-9) and np.all(fine >= exact - 1e-9)
    assert np.all(fine <= coarse + 1e-12)
    assert np.allclose(fine, exact, rtol=0.1)


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.floats(0.05, 0.95), st.sampled_from([0.0, 0.25, 0.5, 1.0]))
def test_scaling_homogeneity(seed, lam, p):
    g = DirectionGrid.planar(64)
    K = support_of_polytope(random_symmetric_polygon([seed, 0]), g)
    L = support_of_polytope(random_symmetric_polygon([seed, 1]), g)
    t = 2.5
    assert np.allclose(p_combination(lam, p, K.scaled(t), L.scaled(t)).values, t * p_combination(lam, p, K, L).values, rtol=1e-12)


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.floats(0.05, 0.95))
def test_wulff_monotonicity_in_p(seed, lam):
    # M_0 <= M_1 pointwise, so the p=0 Wulff area cannot exceed the p=1 one
    g = DirectionGrid.planar(180)
    K = support_of_polytope(random_symmetric_polygon([seed, 0]), g)
    L = support_of_polytope(random_symmetric_polygon([seed, 1]), g)
    a0 = p_combination(lam, 0.0, K, L).volume()
    a1 = p_combination(lam, 1.0, K, L).volume()
    assert a0 <= a1 * (1 + 1e-12)


def _ellipse(g, a, b):
    d = g.directions
    return SupportBody(g, np.sqrt((a * d[:, 0]) ** 2 + (b * d[:, 1]) ** 2))


def test_grid_refinement_deltas_shrink_for_smooth_bodies():
    areas = []
    for m in (90, 180, 360, 720, 1440):
        g = DirectionGrid.planar(m)
        areas.append(p_combination(0.5, 0.0, _ellipse(g, 2, 1), _ellipse(g, 1, 3)).volume())
    steps = np.diff(areas)
    assert np.all(steps <= 0)  # nested grids only add constraints
    assert np.all(np.abs(steps[1:]) <= np.abs(steps[:-1]))
    assert abs(steps[-1]) / areas[-1] < 1e-4


def test_vertex_random_polygons_refine_monotonically():
    areas = []
    for m in (90, 180, 360, 720, 1440):
        g = DirectionGrid.planar(m)
        K, L = (support_of_polytope(random_symmetric_polygon([11, i]), g) for i in (0, 1))
        areas.append(p_combination(0.5, 0.0, K, L).volume())
    assert np.all(np.diff(areas) <= 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_aligned_polygons_have_no_grid_bias(seed):
    v = random_aligned_polygon(seed, 720)
    g = DirectionGrid.planar(720)
    n = np.diff(np.vstack([v, v[:1]]), axis=0) @ np.array([[0.0, -1.0], [1.0, 0.0]])
    angles = np.mod(np.arctan2(n[:, 1], n[:, 0]) * 720 / (2 * np.pi), 1.0)
    assert np.all(np.minimum(angles, 1 - angles) < 1e-6)
    areas = []
    for m in (720, 1440, 2880):
        g = DirectionGrid.planar(m)
        K = support_of_polytope(v, g)
        L = support_of_polytope(random_aligned_polygon(seed + 100, 720), g)
        areas.append(p_combination(0.3, 0.0, K, L).volume())
    assert max(areas) - min(areas) <= 1e-9 * areas[0]
    assert polygon_area(K.polygon) == pytest.approx(polygon_area(Polygon2D(v)), rel=1e-12)
