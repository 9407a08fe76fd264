"""Curve representation, evaluation, restriction and differential data."""

import numpy as np
import pytest

from curveplan.curves import (
    ParamCurve,
    derivative,
    evaluate,
    restrict,
    signed_curvature,
    tangent_into_interior,
)
from curveplan.errors import DegenerateTangentError, GeometryError, SchemaError

from util import circle_bspline, quadratic_arch, segment


def test_evaluate_quadratic_bezier_midpoint():
    arch = quadratic_arch()
    assert np.allclose(evaluate(arch, 0.5), [0.5, 0.5], atol=1e-15)


def test_evaluate_segment():
    s = segment((0, 0), (2, 0))
    assert np.allclose(evaluate(s, 0.25), [0.5, 0.0], atol=1e-15)


def test_evaluate_clamped_cubic_endpoint():
    c = ParamCurve(
        "bspline",
        [(0, 0), (1, 0), (1, 1), (0, 1)],
        degree=3,
        knots=[0, 0, 0, 0, 1, 1, 1, 1],
    )
    assert np.allclose(evaluate(c, 0.0), [0.0, 0.0], atol=1e-15)
    assert np.allclose(evaluate(c, 1.0), [0.0, 1.0], atol=1e-15)


def test_evaluate_outside_domain_raises():
    with pytest.raises(GeometryError):
        evaluate(segment((0, 0), (1, 0)), 1.5)


def test_derivative_examples():
    arch = quadratic_arch()
    assert np.allclose(derivative(arch, 0.0, 1), [1.0, 2.0], atol=1e-15)
    s = segment((0, 0), (2, 0))
    assert np.allclose(derivative(s, 0.7, 1), [2.0, 0.0], atol=1e-15)
    assert np.allclose(derivative(s, 0.7, 2), [0.0, 0.0], atol=1e-15)
    with pytest.raises(GeometryError):
        derivative(s, 0.5, 3)


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(7)
    knots = [0, 0, 0, 0, 0.3, 0.55, 0.8, 1, 1, 1, 1]
    ctrl = rng.uniform(-1, 1, size=(7, 2))
    c = ParamCurve("bspline", ctrl, degree=3, knots=knots)
    h = 1e-6
    for t in rng.uniform(0.05, 0.95, size=12):
        fd = (c.point(t + h) - c.point(t - h)) / (2 * h)
        an = c.deriv(t, 1)
        assert np.linalg.norm(fd - an) <= 1e-6 * max(1.0, np.linalg.norm(an))


def test_tangent_into_interior():
    s = segment((0, 0), (1, 0))
    assert np.allclose(tangent_into_interior(s, 0.0, 1.0, "lo"), [1, 0])
    assert np.allclose(tangent_into_interior(s, 0.0, 1.0, "hi"), [-1, 0])
    arch = quadratic_arch()
    expect = np.array([-1.0, 2.0]) / np.sqrt(5.0)
    assert np.allclose(tangent_into_interior(arch, 0.0, 1.0, "hi"), expect, atol=1e-15)


def test_tangent_orientation_property():
    arch = quadratic_arch()
    eps = 1e-6
    t_lo = tangent_into_interior(arch, 0.2, 0.9, "lo")
    assert np.dot(t_lo, arch.point(0.2 + eps) - arch.point(0.2)) > 0
    t_hi = tangent_into_interior(arch, 0.2, 0.9, "hi")
    assert np.dot(t_hi, arch.point(0.9 - eps) - arch.point(0.9)) > 0


def test_degenerate_tangent_is_error():
    # cusp at t=0.5: c'(0.5) = 0 for this symmetric cubic
    cusp = ParamCurve("bezier", [(0, 0), (1, 1), (0, 1), (1, 0)])
    assert np.allclose(cusp.deriv(0.5, 1), [0, 0], atol=1e-12)
    with pytest.raises(DegenerateTangentError):
        tangent_into_interior(cusp, 0.0, 0.5, "hi")


def test_restrict_segment():
    r = restrict(segment((0, 0), (1, 0)), 0.25, 0.75)
    assert r.kind == "segment"
    assert np.allclose(r.ctrl, [(0.25, 0), (0.75, 0)], atol=1e-15)


def test_restrict_bezier_de_casteljau_half():
    r = restrict(quadratic_arch(), 0.0, 0.5)
    assert np.allclose(r.ctrl, [(0, 0), (0.25, 0.5), (0.5, 0.5)], atol=1e-15)


def test_restrict_full_domain_identity():
    c = circle_bspline(radius=1.0, n_ctrl=12, n_samples=200)
    r = restrict(c, 0.0, 1.0)
    for t in np.linspace(0, 1, 100):
        assert np.linalg.norm(r.point(t) - c.point(t)) <= 1e-12


def test_restrict_consistency_random():
    rng = np.random.default_rng(11)
    knots = [0, 0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1, 1]
    c = ParamCurve("bspline", rng.uniform(0, 2, (7, 2)), degree=3, knots=knots)
    diag = c.bbox_diag()
    t0, t1 = 0.18, 0.83
    r = restrict(c, t0, t1)
    for t in rng.uniform(t0, t1, 40):
        s = (t - t0) / (t1 - t0)
        assert np.linalg.norm(r.point(s) - c.point(t)) <= 1e-12 * max(diag, 1.0)


def test_restrict_inverted_interval_raises():
    with pytest.raises(GeometryError):
        restrict(segment((0, 0), (1, 0)), 0.8, 0.2)


def test_bbox_contains_samples():
    rng = np.random.default_rng(3)
    knots = [0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1, 1, 1]
    c = ParamCurve("bspline", rng.normal(0, 3, (7, 2)), degree=2, knots=knots)
    lo, hi = c.bbox()
    pts = c.point(np.linspace(0, 1, 1000))
    assert np.all(pts >= lo - 1e-12) and np.all(pts <= hi + 1e-12)


def test_signed_curvature_closed_forms():
    # straight segment: zero curvature
    assert signed_curvature(segment((0, 0), (3, 1)), 0.4) == 0.0
    # arch at the apex: c'=(1,0), c''=(0,-4) -> kappa = -4 (differentiation oracle)
    assert abs(signed_curvature(quadratic_arch(), 0.5) - (-4.0)) < 1e-12


def test_signed_curvature_circle_spline():
    # oracle: the exact circle of radius 2 has curvature +1/2 everywhere (CCW)
    c = circle_bspline(radius=2.0, n_ctrl=48)
    for t in np.linspace(0.02, 0.98, 25):
        assert abs(signed_curvature(c, t) - 0.5) <= 1e-3


def test_bspline_validation():
    with pytest.raises(SchemaError):
        ParamCurve("bspline", [(0, 0), (1, 1)], degree=1, knots=[0, 0, 1])  # count
    with pytest.raises(SchemaError):
        ParamCurve(
            "bspline", [(0, 0), (1, 1), (2, 0)], degree=1, knots=[0, 0, 1, 0.5, 1]
        )  # decreasing
    with pytest.raises(SchemaError):  # cubic with a double interior knot is not C2
        ParamCurve(
            "bspline",
            np.zeros((6, 2)),
            degree=3,
            knots=[0, 0, 0, 0, 0.5, 0.5, 1, 1, 1, 1],
        )


def test_low_degree_interior_knots_flagged():
    c = ParamCurve(
        "bspline",
        [(0, 0), (1, 1), (2, 0), (3, 1), (4, 0)],
        degree=2,
        knots=[0, 0, 0, 0.4, 0.7, 1, 1, 1],
    )
    assert c.reduced_continuity


def test_reversed_curve():
    arch = quadratic_arch()
    rev = arch.reversed()
    for t in np.linspace(0, 1, 17):
        assert np.allclose(rev.point(t), arch.point(1 - t), atol=1e-14)
