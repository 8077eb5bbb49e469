import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cweig.errors import InfeasibleShape
from cweig.geometry import (
    SupportShape,
    area_perimeter,
    boundary_point,
    convexity_matrix,
    curvature_radius,
    eval_support,
    feasibility_margin,
    inradius,
    is_feasible,
    odd_harmonics,
    sample_boundary,
    uniform_thetas,
)


def single(k, a=0.0, b=0.0):
    return SupportShape.from_dict({k: (a, b)})


@st.composite
def shapes(draw, k_max=15):
    ks = odd_harmonics(k_max)
    raw = draw(st.lists(st.floats(-1, 1), min_size=2 * len(ks), max_size=2 * len(ks)))
    x = np.array(raw) / np.concatenate([ks, ks]) ** 3 * 0.3
    return SupportShape.from_vector(x, k_max)


def test_disk_support():
    f, fp, fpp = eval_support(SupportShape.disk(), 0.7)
    assert (f, fp, fpp) == (1.0, 0.0, 0.0)


def test_single_harmonic_support():
    eps = 0.03
    f, fp, fpp = eval_support(single(3, eps), 0.0)
    assert f == pytest.approx(1 + eps, abs=1e-15)
    assert fp == pytest.approx(0.0, abs=1e-15)
    assert fpp == pytest.approx(-9 * eps, abs=1e-15)
    assert curvature_radius(single(3, eps), 0.0) == pytest.approx(1 - 8 * eps, abs=1e-15)


def test_structural_invariants():
    with pytest.raises(ValueError):
        single(4, 0.1)
    with pytest.raises(ValueError):
        single(1, 0.1)
    with pytest.raises(ValueError):
        SupportShape(width=-1.0)


@settings(max_examples=40, deadline=None)
@given(shapes())
def test_width_invariance(shape):
    th = uniform_thetas(1024)
    f1, _, _ = eval_support(shape, th)
    f2, _, _ = eval_support(shape, th + np.pi)
    assert np.max(np.abs(f1 + f2 - shape.width)) <= 1e-12


def test_boundary_points():
    d = SupportShape.disk()
    assert np.allclose(boundary_point(d, 0.0), [1, 0], atol=1e-15)
    assert np.allclose(boundary_point(d, np.pi / 2), [0, 1], atol=1e-15)
    assert np.allclose(boundary_point(single(3, 0.05), 0.0), [1.05, 0], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(shapes(), st.floats(-np.pi, np.pi))
def test_rotation_covariance(shape, alpha):
    th = uniform_thetas(64)
    rot = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
    p0 = boundary_point(shape, th)
    p1 = boundary_point(shape.rotated(alpha), th + alpha)
    assert np.max(np.abs(p1 - p0 @ rot.T)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(shapes())
def test_normal_is_outer_normal(shape):
    # the tangent of the boundary curve is orthogonal to (cos, sin)
    th = uniform_thetas(128)
    h = 1e-6
    d = (boundary_point(shape, th + h) - boundary_point(shape, th - h)) / (2 * h)
    n = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert np.max(np.abs(np.sum(d * n, axis=1))) <= 1e-7


def test_sample_boundary_examples():
    g = sample_boundary(SupportShape.disk(), 256)
    assert np.allclose(g.radii, 1.0)
    assert g.size == 256
    with pytest.raises(InfeasibleShape):
        sample_boundary(single(3, 1 / 8 + 1e-3))
    g = sample_boundary(single(3, 0.1), 512)
    assert g.radii.min() == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(ValueError):
        sample_boundary(SupportShape.disk(), 32)


def test_boundary_grid_invariants():
    shape = SupportShape.from_dict({3: (0.02, -0.01), 5: (0.004, 0.003)})
    g = sample_boundary(shape, 512)
    # closes up and radii stay below the width
    p_end = boundary_point(shape, 2 * np.pi)
    assert np.max(np.abs(p_end - g.points[0])) <= 1e-12
    assert g.radii.max() < shape.width and g.radii.min() > 0
    assert np.allclose(g.support, np.sum(g.points * g.normals, axis=1))
    assert g.weights.sum() == pytest.approx(np.pi * shape.width, rel=1e-12)


def test_feasibility_margin_examples():
    assert feasibility_margin(SupportShape.disk()) == pytest.approx(1.0)
    assert feasibility_margin(single(3, 0.1)) == pytest.approx(0.2, abs=1e-12)
    assert feasibility_margin(single(5, 0.0, 0.02)) == pytest.approx(0.52, abs=1e-12)
    assert is_feasible(single(3, 0.1))
    assert not is_feasible(single(3, 0.125))


def test_area_perimeter_examples():
    a, p = area_perimeter(SupportShape.disk())
    assert a == pytest.approx(np.pi, abs=1e-12)
    assert p == pytest.approx(2 * np.pi, abs=1e-12)
    # 1/2 int (f^2 - f'^2) with f = 1 + eps cos 3t gives pi (1 - 4 eps^2)
    a, _ = area_perimeter(single(3, 0.05))
    assert a == pytest.approx(np.pi * 0.99, abs=1e-10)
    with pytest.raises(InfeasibleShape):
        area_perimeter(single(3, 0.2))


@settings(max_examples=40, deadline=None)
@given(shapes())
def test_barbier_perimeter(shape):
    _, p = area_perimeter(shape)
    assert p == pytest.approx(2 * np.pi, abs=1e-10)


@pytest.mark.parametrize("ell", [3, 5, 7])
def test_area_expansion(ell):
    # with c_l = eps (a_l = 2 eps) the area is pi + 2 pi (1 - l^2) eps^2, exactly quadratic
    eps = 1e-3
    a, _ = area_perimeter(single(ell, 2 * eps))
    assert a == pytest.approx(np.pi + 2 * np.pi * (1 - ell**2) * eps**2, abs=1e-14)


def test_isodiametric_area_bound():
    # among width-2 bodies the disk has the largest area
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.standard_normal(2 * len(odd_harmonics(11))) * 0.01
        shape = SupportShape.from_vector(x, 11)
        if feasibility_margin(shape) > 0:
            assert area_perimeter(shape)[0] < np.pi


def test_convexity_matrix_matches_radii():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(2 * len(odd_harmonics(9))) * 0.005
    shape = SupportShape.from_vector(x, 9)
    G = convexity_matrix(9, 96)
    assert np.allclose(1.0 + G @ x, curvature_radius(shape, uniform_thetas(96)), atol=1e-14)


def test_vector_round_trip_and_scaling():
    shape = SupportShape.from_dict({3: (0.01, 0.02), 9: (-0.001, 0.0)})
    v = shape.to_vector(11)
    assert SupportShape.from_vector(v, 11).coeffs() == {**shape.coeffs(), 5: (0.0, 0.0),
                                                        7: (0.0, 0.0), 11: (0.0, 0.0)}
    with pytest.raises(ValueError):
        shape.to_vector(7)
    s2 = shape.scaled(2.0)
    assert s2.width == 4.0
    assert np.allclose(boundary_point(s2, 0.3), 2 * boundary_point(shape, 0.3))
    assert inradius(SupportShape.disk()) == pytest.approx(1.0)
    assert inradius(single(3, 0.05)) == pytest.approx(0.95, abs=1e-4)


def test_perturbed_adds_coefficients():
    base = SupportShape.from_dict({3: (0.01, 0.0)})
    p = base.perturbed([3, 5], [1.0, 0.0], [0.0, 1.0], 1e-3)
    assert p.coeffs() == {3: (0.011, 0.0), 5: (0.0, 1e-3)}
    assert math.isclose(p.width, 2.0)
