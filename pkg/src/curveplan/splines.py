"""Tensor-product spline maps, Newton inversion and the mesh-intersection
pipeline on the parameter square.

The interface between two maps is modeled on the first map's parameter
square: the second map's knot iso-curves and boundary curves are pulled back
by pointwise Newton inversion plus a least-squares B-spline fit, clipped to
the image overlap, and combined with the first map's own knot lines into a
curvilinear drawing whose regions are single knot elements of both spaces.
"""

from dataclasses import dataclass

import numpy as np

from .arrangement import build_drawing
from .curves import ParamCurve, basis_row, fit_bspline, uniform_arclength_knots
from .errors import FitError, GeometryError, InversionError, SchemaError

INVERT_MAX_ITER = 50
INVERT_TOL_FACTOR = 1e-11


class TensorSplineSpace:
    """A bivariate tensor-product B-spline space with clamped [0,1] knots."""

    def __init__(self, degrees, knots_u, knots_v):
        self.du, self.dv = int(degrees[0]), int(degrees[1])
        self.tu = np.asarray(knots_u, dtype=float)
        self.tv = np.asarray(knots_v, dtype=float)
        for name, t, d in (("knots_u", self.tu, self.du), ("knots_v", self.tv, self.dv)):
            if len(t) < 2 * (d + 1):
                raise SchemaError(f"{name}: too few knots for degree {d}", field=name)
            if np.any(np.diff(t) < 0):
                raise SchemaError(f"{name}: knots must be non-decreasing", field=name)
            if t[0] != 0.0 or t[-1] != 1.0:
                raise SchemaError(f"{name}: knots must span [0, 1]", field=name)
            if np.any(t[: d + 1] != 0.0) or np.any(t[-d - 1 :] != 1.0):
                raise SchemaError(f"{name}: knots must be clamped", field=name)
        self.nu = len(self.tu) - self.du - 1
        self.nv = len(self.tv) - self.dv - 1

    @property
    def degrees(self):
        return (self.du, self.dv)

    def breakpoints_u(self):
        return np.unique(self.tu)

    def breakpoints_v(self):
        return np.unique(self.tv)

    def interior_knots_u(self):
        return np.unique(self.tu[self.du + 1 : -self.du - 1])

    def interior_knots_v(self):
        return np.unique(self.tv[self.dv + 1 : -self.dv - 1])

    def elements(self):
        """All knot elements as (iu, iv, (u0, u1, v0, v1))."""
        bu, bv = self.breakpoints_u(), self.breakpoints_v()
        out = []
        for iu in range(len(bu) - 1):
            for iv in range(len(bv) - 1):
                out.append((iu, iv, (bu[iu], bu[iu + 1], bv[iv], bv[iv + 1])))
        return out

    def element_of(self, u, v, tol=0.0):
        """Indices of the knot element containing (u, v)."""
        bu, bv = self.breakpoints_u(), self.breakpoints_v()
        iu = int(np.clip(np.searchsorted(bu, u + tol, side="right") - 1, 0, len(bu) - 2))
        iv = int(np.clip(np.searchsorted(bv, v + tol, side="right") - 1, 0, len(bv) - 2))
        return iu, iv

    def support(self, i, j):
        """Parameter rectangle supporting basis function (i, j)."""
        return (
            float(self.tu[i]),
            float(self.tu[i + self.du + 1]),
            float(self.tv[j]),
            float(self.tv[j + self.dv + 1]),
        )

    def basis_u(self, t):
        return basis_row(self.tu, self.du, float(t))

    def basis_v(self, t):
        return basis_row(self.tv, self.dv, float(t))

    def rows_u(self, params):
        return [self.basis_u(t) for t in np.atleast_1d(params)]

    def rows_v(self, params):
        return [self.basis_v(t) for t in np.atleast_1d(params)]


def _tensor_eval(space, values, u, v):
    """Evaluate sum_ij values[i, j] B_i(u) B_j(v) for same-shape u, v arrays."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    scalar = u.ndim == 0
    uu, vv = np.ravel(u), np.ravel(v)
    tail = values.shape[2:]
    out = np.zeros((len(uu),) + tail)
    for k in range(len(uu)):
        fu, bu = space.basis_u(uu[k])
        fv, bv = space.basis_v(vv[k])
        block = values[fu : fu + space.du + 1, fv : fv + space.dv + 1]
        out[k] = np.tensordot(np.outer(bu, bv), block, axes=2)
    out = out.reshape(u.shape + tail)
    return out[()] if scalar else out


def _tensor_jacobian(space, ctrl, u, v):
    """Partial derivatives of a vector-valued tensor spline at (u, v) pairs."""
    from .curves import derivative_data

    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    scalar = u.ndim == 0
    uu, vv = np.ravel(u), np.ravel(v)
    out = np.zeros((len(uu), 2, 2))

    # derivative coefficient grids along each direction
    nu, nv = ctrl.shape[0], ctrl.shape[1]
    flat_v = ctrl.reshape(nu, -1)
    ku, du1, cu = derivative_data(space.tu, space.du, flat_v)
    cu = cu.reshape(-1, nv, *ctrl.shape[2:])
    flat_u = np.moveaxis(ctrl, 1, 0).reshape(nv, -1)
    kv, dv1, cv = derivative_data(space.tv, space.dv, flat_u)
    cv = np.moveaxis(cv.reshape(-1, nu, *ctrl.shape[2:]), 0, 1)

    for k in range(len(uu)):
        fu, bu = basis_row(ku, du1, uu[k]) if du1 >= 0 else (0, np.zeros(1))
        fv0, bv0 = space.basis_v(vv[k])
        block = cu[fu : fu + du1 + 1, fv0 : fv0 + space.dv + 1]
        dp_du = np.tensordot(np.outer(bu, bv0), block, axes=2)

        fu0, bu0 = space.basis_u(uu[k])
        fv, bv = basis_row(kv, dv1, vv[k]) if dv1 >= 0 else (0, np.zeros(1))
        block = cv[fu0 : fu0 + space.du + 1, fv : fv + dv1 + 1]
        dp_dv = np.tensordot(np.outer(bu0, bv), block, axes=2)
        out[k, :, 0] = dp_du
        out[k, :, 1] = dp_dv
    out = out.reshape(u.shape + (2, 2))
    return out[()] if scalar else out


class SplineMap2D:
    """Tensor-product spline map T: [0,1]^2 -> R^2 with positive Jacobian."""

    def __init__(self, space, control, check_bijective=True):
        self.space = space
        self.ctrl = np.asarray(control, dtype=float)
        if self.ctrl.shape != (space.nu, space.nv, 2):
            raise SchemaError(
                f"control net must have shape ({space.nu}, {space.nv}, 2)",
                field="control",
            )
        if not np.all(np.isfinite(self.ctrl)):
            raise SchemaError("control net must be finite", field="control")
        if check_bijective:
            self._check_jacobian_sign()

    def _check_jacobian_sign(self):
        us, vs = [], []
        for brk, d, acc in (
            (self.space.breakpoints_u(), self.space.du, us),
            (self.space.breakpoints_v(), self.space.dv, vs),
        ):
            for a, b in zip(brk[:-1], brk[1:]):
                acc.extend(np.linspace(a, b, d + 3))
        uu, vv = np.meshgrid(np.unique(us), np.unique(vs), indexing="ij")
        det = self.jacobian_det(uu, vv)
        if np.min(det) <= 0.0:
            raise GeometryError(
                f"map Jacobian is not positive on the sampled grid (min {np.min(det):.2e})"
            )

    def point(self, u, v):
        return _tensor_eval(self.space, self.ctrl, u, v)

    def point_pairs(self, pts):
        pts = np.asarray(pts, dtype=float)
        return self.point(pts[..., 0], pts[..., 1])

    def jacobian(self, u, v):
        return _tensor_jacobian(self.space, self.ctrl, u, v)

    def jacobian_det(self, u, v):
        jac = self.jacobian(u, v)
        return jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]

    def mapped_with_jacobian(self, pts):
        """Quadrature hook: physical points and Jacobian determinants."""
        pts = np.asarray(pts, dtype=float)
        return self.point_pairs(pts), self.jacobian_det(pts[..., 0], pts[..., 1])

    def bbox_diag(self):
        lo = self.ctrl.reshape(-1, 2).min(axis=0)
        hi = self.ctrl.reshape(-1, 2).max(axis=0)
        return float(np.hypot(*(hi - lo)))


class SplineFunc2D:
    """Scalar tensor-product spline function on the parameter square."""

    def __init__(self, space, coefficients):
        self.space = space
        self.coeffs = np.asarray(coefficients, dtype=float)
        if self.coeffs.shape != (space.nu, space.nv):
            raise SchemaError(
                f"coefficient grid must have shape ({space.nu}, {space.nv})",
                field="coefficients",
            )

    def value(self, u, v):
        return _tensor_eval(self.space, self.coeffs[..., None], u, v)[..., 0]

    def __call__(self, u, v):
        return self.value(u, v)


# ---------------------------------------------------------------------------
# inversion


def _grid_guess(T, p, n=7):
    us = np.linspace(0.0, 1.0, n)
    uu, vv = np.meshgrid(us, us, indexing="ij")
    pts = T.point(uu, vv)
    d = np.linalg.norm(pts - np.asarray(p, float), axis=-1)
    k = int(np.argmin(d))
    return float(uu.ravel()[k]), float(vv.ravel()[k])


def invert(T, p, guess=None):
    """Parameters (u, v) with T(u, v) = p, by clamped damped Newton.

    Raises InversionError when no parameter in [0,1]^2 reproduces p to
    tolerance (the point lies outside the map image).
    """
    p = np.asarray(p, dtype=float)
    tol = INVERT_TOL_FACTOR * max(T.bbox_diag(), 1e-12)
    if guess is None:
        u, v = _grid_guess(T, p)
    else:
        u, v = float(guess[0]), float(guess[1])
    r = T.point(u, v) - p
    res = float(np.linalg.norm(r))
    for _ in range(INVERT_MAX_ITER):
        if res <= tol:
            return u, v
        jac = T.jacobian(u, v)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        lam, improved = 1.0, False
        while lam > 1.0 / 4096:
            u2 = float(np.clip(u + lam * step[0], 0.0, 1.0))
            v2 = float(np.clip(v + lam * step[1], 0.0, 1.0))
            r2 = T.point(u2, v2) - p
            n2 = float(np.linalg.norm(r2))
            if n2 < res:
                u, v, r, res, improved = u2, v2, r2, n2, True
                break
            lam *= 0.5
        if not improved:
            break
    if res <= tol:
        return u, v
    raise InversionError(
        f"point inversion did not converge (residual {res:.2e}); point outside image?"
    )


def _try_invert(T, p, guess=None):
    try:
        return invert(T, p, guess=guess)
    except InversionError:
        return None


# ---------------------------------------------------------------------------
# iso-curve extraction and pull-back


def knot_iso_curves(T):
    """Physical-space curves of the map's interior knot lines, extracted
    exactly from the tensor product (one B-spline curve per interior knot
    per direction)."""
    space = T.space
    curves = []
    for ubar in space.interior_knots_u():
        first, bu = space.basis_u(ubar)
        q = np.tensordot(bu, T.ctrl[first : first + space.du + 1], axes=1)
        curves.append(
            ParamCurve("bspline", q, degree=space.dv, knots=space.tv.copy())
        )
    for vbar in space.interior_knots_v():
        first, bv = space.basis_v(vbar)
        q = np.tensordot(bv, T.ctrl[:, first : first + space.dv + 1], axes=(0, 1))
        curves.append(
            ParamCurve("bspline", q, degree=space.du, knots=space.tu.copy())
        )
    return curves


def boundary_curves(T):
    """The four boundary curves of the map image (clamped control rows)."""
    space = T.space
    return [
        ParamCurve("bspline", T.ctrl[:, 0], degree=space.du, knots=space.tu.copy()),
        ParamCurve("bspline", T.ctrl[:, -1], degree=space.du, knots=space.tu.copy()),
        ParamCurve("bspline", T.ctrl[0], degree=space.dv, knots=space.tv.copy()),
        ParamCurve("bspline", T.ctrl[-1], degree=space.dv, knots=space.tv.copy()),
    ]


@dataclass
class PulledBackCurve:
    """A least-squares fit in the parameter square of an inverted curve."""

    curve: ParamCurve
    residual: float
    source_range: tuple
    trimmed: bool


def _chebyshev_lobatto(a, b, m):
    k = np.arange(m)
    x = np.cos(np.pi * k / (m - 1))[::-1]
    return a + (b - a) * 0.5 * (x + 1.0)


def _inside_arcs(T1, gamma, probes=129):
    """Maximal parameter ranges of gamma lying inside the image of T1.

    Boundaries are refined by bisection on the inversion-success predicate.
    """
    a, b = gamma.domain
    ts = np.linspace(a, b, probes)
    ok = []
    warm = None
    for t in ts:
        sol = _try_invert(T1, gamma.point(t), guess=warm)
        ok.append(sol is not None)
        warm = sol if sol is not None else None

    arcs = []
    i = 0
    while i < len(ts):
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(ts) and ok[j + 1]:
            j += 1
        lo, hi = ts[i], ts[j]
        if i > 0:
            lo = _bisect_boundary(T1, gamma, ts[i - 1], ts[i], inside_right=True)
        if j + 1 < len(ts):
            hi = _bisect_boundary(T1, gamma, ts[j + 1], ts[j], inside_right=False)
        if hi - lo > 1e-9 * (b - a):
            arcs.append((float(lo), float(hi)))
        i = j + 1
    return arcs


def _bisect_boundary(T1, gamma, t_out, t_in, inside_right, tol=1e-10):
    warm = _try_invert(T1, gamma.point(t_in))
    lo, hi = (t_out, t_in) if inside_right else (t_in, t_out)
    # invariant: exactly one end of [lo, hi] inverts successfully
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        sol = _try_invert(T1, gamma.point(mid), guess=warm)
        good = sol is not None
        if good:
            warm = sol
        if inside_right:
            lo, hi = (lo, mid) if good else (mid, hi)
        else:
            lo, hi = (mid, hi) if good else (lo, mid)
    return hi if inside_right else lo


def pull_back(T1, gamma, sample_count=65, fit_tol=1e-8, arc=None):
    """Pull a physical curve back into T1's parameter square.

    Samples at Chebyshev-distributed parameters, inverts pointwise with
    warm starts, and fits a B-spline of degree max(3, deg gamma) with
    uniform-arc-length knots.  One escalation (double samples and knots) is
    attempted before failing.
    """
    a, b = gamma.domain
    if arc is None:
        arcs = _inside_arcs(T1, gamma)
        if not arcs:
            raise InversionError("curve lies outside the map image")
        arc = max(arcs, key=lambda ab: ab[1] - ab[0])
    lo, hi = arc
    trimmed = lo > a + 1e-12 or hi < b - 1e-12

    degree = max(3, gamma.degree)
    m = max(sample_count, 2 * degree + 3)
    n_ctrl = max(degree + 1, min(12, m // 5))
    for attempt in range(2):
        ts = _chebyshev_lobatto(lo, hi, m)
        params = (ts - lo) / (hi - lo)
        inverted = []
        warm = None
        for t in ts:
            sol = _try_invert(T1, gamma.point(t), guess=warm)
            if sol is None:
                raise InversionError(
                    f"inversion failed inside a trimmed arc at parameter {t:.6g}"
                )
            inverted.append(sol)
            warm = sol
        inverted = np.asarray(inverted)
        knots = uniform_arclength_knots(inverted, degree, n_ctrl, sample_params=params)
        ctrl = fit_bspline(params, inverted, degree, knots, fix_ends=True)
        fit = ParamCurve("bspline", ctrl, degree=degree, knots=knots)
        residual = max(
            float(np.linalg.norm(T1.point_pairs(fit.point(s)) - gamma.point(t)))
            for s, t in zip(params, ts)
        )
        if residual <= fit_tol:
            return PulledBackCurve(fit, residual, (float(lo), float(hi)), trimmed)
        m = 2 * m - 1
        n_ctrl = min(2 * n_ctrl, m - 2)
    raise FitError(
        f"pull-back fit residual {residual:.2e} exceeds tolerance {fit_tol:.2e}",
        worst_sample=None,
        residual=residual,
    )


# ---------------------------------------------------------------------------
# interface drawing


def _point_curve_distance(p, curve, presamples=65):
    ts = np.linspace(*curve.domain, presamples)
    pts = curve.point(ts)
    i = int(np.argmin(np.linalg.norm(pts - p, axis=1)))
    t = float(ts[i])
    a, b = curve.domain
    for _ in range(8):
        d1 = curve.deriv(t)
        g = float(np.dot(curve.point(t) - p, d1))
        h = float(np.dot(d1, d1) + np.dot(curve.point(t) - p, curve.deriv(t, 2)))
        if h <= 0:
            break
        t = float(np.clip(t - g / h, a, b))
    return float(np.linalg.norm(curve.point(t) - p))


def _coincident(candidate, existing, tol):
    ts = np.linspace(*candidate.domain, 17)
    return all(
        _point_curve_distance(candidate.point(t), existing) <= tol for t in ts
    )


def build_interface_drawing(T1, T2, tol=1e-7, fit_tol=1e-8, sample_count=65):
    """The interface drawing on T1's parameter square.

    Combines the square boundary, T1's interior knot lines, and pull-backs
    of T2's knot iso-curves and boundary curves (clipped to the image
    overlap, duplicates of already-present curves dropped).
    """
    sq = [
        ParamCurve("segment", [(0.0, 0.0), (1.0, 0.0)]),
        ParamCurve("segment", [(1.0, 0.0), (1.0, 1.0)]),
        ParamCurve("segment", [(1.0, 1.0), (0.0, 1.0)]),
        ParamCurve("segment", [(0.0, 1.0), (0.0, 0.0)]),
    ]
    curves = list(sq)
    for ubar in T1.space.interior_knots_u():
        curves.append(ParamCurve("segment", [(ubar, 0.0), (ubar, 1.0)]))
    for vbar in T1.space.interior_knots_v():
        curves.append(ParamCurve("segment", [(0.0, vbar), (1.0, vbar)]))

    pulled = []
    for gamma in knot_iso_curves(T2) + boundary_curves(T2):
        for arc in _inside_arcs(T1, gamma):
            pb = pull_back(T1, gamma, sample_count=sample_count, fit_tol=fit_tol, arc=arc)
            pulled.append(pb)

    for pb in pulled:
        dedupe_tol = max(tol, 10.0 * pb.residual)
        if not any(_coincident(pb.curve, c, dedupe_tol) for c in curves):
            curves.append(pb.curve)

    return build_drawing(curves, tol=tol)


# ---------------------------------------------------------------------------
# spline-product integration


def region_covered_by(region, tiles, T1, T2):
    """Whether a region maps into the image of T2 (zero-extension test)."""
    rep = tiles[0].grids(np.array([0.5]), np.array([0.5]))[0][0, 0]
    return _try_invert(T2, T1.point_pairs(rep)) is not None


def integrate_spline_product(s1, s2, T1, T2, region_set, n):
    """Integral over the parameter square of s1 * (s2 o T2^-1 o T1).

    Region-aware: each extracted region lies in single knot elements of
    both spaces, so with enough Gauss points per direction the result is
    exact up to inversion and pull-back tolerances.  Regions outside the
    image of T2 contribute zero (zero extension).
    """
    from .quadrature import gauss01, region_tiles

    drawing = region_set.drawing
    u, w = gauss01(n)
    ww = np.outer(w, w)
    total = 0.0
    for region in region_set.regions:
        tiles = region_tiles(region, drawing, probe_n=n)
        if not region_covered_by(region, tiles, T1, T2):
            continue
        warm = None
        for tile in tiles:
            pts, det = tile.grids(u, u)
            s1_vals = s1.value(pts[..., 0], pts[..., 1])
            phys = T1.point_pairs(pts)
            s2_vals = np.zeros_like(s1_vals)
            for i in range(pts.shape[0]):
                for j in range(pts.shape[1]):
                    sol = _try_invert(T2, phys[i, j], guess=warm)
                    if sol is None:
                        raise InversionError(
                            "inversion failed inside a region marked covered; "
                            "pull-back accuracy insufficient"
                        )
                    warm = sol
                    s2_vals[i, j] = s2.value(sol[0], sol[1])
            total += float(np.sum(ww * s1_vals * s2_vals * det))
    return total


def composed_field(s2, T1, T2, outside_value=0.0, strict=False):
    """The field s2 o T2^-1 o T1 on T1's parameter square, zero-extended.

    Returns a grid-callable f(u, v); points whose physical image lies
    outside T2 evaluate to ``outside_value``, or raise when ``strict``
    (for integration over regions known to be covered).
    """

    def field(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast(u, v).shape
        uu = np.broadcast_to(u, shape).ravel()
        vv = np.broadcast_to(v, shape).ravel()
        out = np.full(len(uu), float(outside_value))
        warm = None
        for k in range(len(uu)):
            p = T1.point(uu[k], vv[k])
            sol = _try_invert(T2, p, guess=warm)
            if sol is not None:
                warm = sol
                out[k] = s2.value(sol[0], sol[1])
            elif strict:
                raise InversionError(
                    f"inversion failed at ({uu[k]:.6g}, {vv[k]:.6g}) inside a "
                    "region marked covered"
                )
        return out.reshape(shape) if shape else float(out[0])

    return field
