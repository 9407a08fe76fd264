"""Shared fixture builders for the test suite."""

import numpy as np

from curveplan.curves import ParamCurve, basis_matrix, fit_bspline


def segment(a, b):
    return ParamCurve("segment", [a, b])


def quadratic_arch():
    """The Bezier arch (0,0),(0.5,1),(1,0): y = 2t(1-t), x = t."""
    return ParamCurve("bezier", [(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)])


def square_curves(size=1.0, origin=(0.0, 0.0)):
    """Four CCW-ordered segments bounding a square."""
    x0, y0 = origin
    a, b, c, d = (
        (x0, y0),
        (x0 + size, y0),
        (x0 + size, y0 + size),
        (x0, y0 + size),
    )
    return [segment(a, b), segment(b, c), segment(c, d), segment(d, a)]


def circle_bspline(radius=1.0, center=(0.0, 0.0), n_ctrl=48, n_samples=720):
    """Clamped cubic B-spline least-squares approximation of a CCW circle.

    Simple interior knots keep the curve C2; with 48 control points the
    pointwise error is far below 1e-6 * radius.
    """
    ts = np.linspace(0.0, 1.0, n_samples)
    ang = 2.0 * np.pi * ts
    pts = np.stack(
        [center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1
    )
    degree = 3
    interior = np.linspace(0.0, 1.0, n_ctrl - degree + 1)[1:-1]
    knots = np.concatenate([[0.0] * (degree + 1), interior, [1.0] * (degree + 1)])
    ctrl = fit_bspline(ts, pts, degree, knots, fix_ends=True)
    return ParamCurve("bspline", ctrl, degree=degree, knots=knots)


def collocation_error(curve, pts, ts):
    return max(np.linalg.norm(curve.point(t) - p) for t, p in zip(ts, pts))


__all__ = [
    "segment",
    "quadratic_arch",
    "square_curves",
    "circle_bspline",
    "collocation_error",
    "basis_matrix",
]
