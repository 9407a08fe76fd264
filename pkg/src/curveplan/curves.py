"""Planar parametric curves: segments, Bezier curves and clamped B-splines.

All three kinds are stored in a common clamped B-spline form (a segment is a
degree-1 Bezier), which keeps evaluation, differentiation and restriction
exact on polynomial pieces.  Curves are immutable; every operation returns
plain numpy data or a new curve.
"""

import numpy as np

from .errors import DegenerateTangentError, GeometryError, SchemaError

KINDS = ("segment", "bezier", "bspline")

#: relative tolerance used to snap split parameters onto existing knots
_KNOT_SNAP = 1e-12


# ---------------------------------------------------------------------------
# low-level B-spline machinery


def find_span(knots, degree, t):
    """Index i of the knot span with knots[i] <= t < knots[i+1].

    The returned span always addresses a non-empty span inside the clamped
    domain, so evaluation at the right domain end is well defined.
    """
    n = len(knots) - degree - 1
    if t >= knots[n]:
        i = n - 1
        while knots[i] == knots[i + 1]:
            i -= 1
        return i
    if t <= knots[degree]:
        i = degree
        while knots[i] == knots[i + 1]:
            i += 1
        return i
    return int(np.searchsorted(knots, t, side="right")) - 1


def basis_funs(knots, degree, span, t):
    """Non-vanishing B-spline basis values N_{span-degree},...,N_{span} at t."""
    out = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    out[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = t - knots[span + 1 - j]
        right[j] = knots[span + j] - t
        saved = 0.0
        for r in range(j):
            tmp = out[r] / (right[r + 1] + left[j - r])
            out[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        out[j] = saved
    return out


def basis_row(knots, degree, t):
    """(first_index, values) of the non-zero basis functions at parameter t."""
    span = find_span(knots, degree, t)
    return span - degree, basis_funs(knots, degree, span, t)


def basis_matrix(knots, degree, params):
    """Dense collocation matrix B[k, i] = N_i(params[k])."""
    n = len(knots) - degree - 1
    mat = np.zeros((len(params), n))
    for k, t in enumerate(params):
        first, vals = basis_row(knots, degree, t)
        mat[k, first : first + degree + 1] = vals
    return mat


def deboor_point(knots, degree, ctrl, t):
    """Evaluate a B-spline curve with the de Boor recurrence."""
    span = find_span(knots, degree, t)
    d = [np.array(ctrl[span - degree + j], dtype=float) for j in range(degree + 1)]
    for r in range(1, degree + 1):
        for j in range(degree, r - 1, -1):
            i = span - degree + j
            den = knots[i + degree - r + 1] - knots[i]
            alpha = 0.0 if den == 0.0 else (t - knots[i]) / den
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
    return d[degree]


def derivative_data(knots, degree, ctrl):
    """Control data of the hodograph (first derivative curve)."""
    ctrl = np.asarray(ctrl, dtype=float)
    if degree == 0:
        return np.asarray(knots, dtype=float), 0, np.zeros_like(ctrl[:1])
    den = knots[degree + 1 : degree + len(ctrl)] - knots[1 : len(ctrl)]
    den = np.where(den == 0.0, 1.0, den)
    dctrl = degree * (ctrl[1:] - ctrl[:-1]) / den[:, None]
    return np.asarray(knots[1:-1], dtype=float), degree - 1, dctrl


def insert_knot(knots, degree, ctrl, t):
    """One Boehm knot insertion step; returns the refined (knots, ctrl)."""
    knots = np.asarray(knots, dtype=float)
    ctrl = np.asarray(ctrl, dtype=float)
    span = find_span(knots, degree, t)
    new_ctrl = np.empty((len(ctrl) + 1, ctrl.shape[1]))
    new_ctrl[: span - degree + 1] = ctrl[: span - degree + 1]
    for i in range(span - degree + 1, span + 1):
        den = knots[i + degree] - knots[i]
        alpha = 1.0 if den == 0.0 else (t - knots[i]) / den
        new_ctrl[i] = (1.0 - alpha) * ctrl[i - 1] + alpha * ctrl[i]
    new_ctrl[span + 1 :] = ctrl[span:]
    new_knots = np.insert(knots, span + 1, t)
    return new_knots, new_ctrl


def _multiplicity(knots, t, tol):
    return int(np.sum(np.abs(knots - t) <= tol))


def split_bspline(knots, degree, ctrl, t):
    """Split a clamped B-spline at t into two independent clamped curves."""
    knots = np.asarray(knots, dtype=float)
    ctrl = np.asarray(ctrl, dtype=float)
    span_len = knots[-1] - knots[0]
    snap = _KNOT_SNAP * max(span_len, 1.0)
    near = knots[np.abs(knots - t) <= snap]
    if len(near):
        t = near[0]
    mult = _multiplicity(knots, t, snap)
    for _ in range(degree + 1 - mult):
        knots, ctrl = insert_knot(knots, degree, ctrl, t)
    j = int(np.searchsorted(knots, t - snap, side="left"))
    while abs(knots[j] - t) > snap:
        j += 1
    left = (knots[: j + degree + 1].copy(), ctrl[:j].copy())
    right = (knots[j:].copy(), ctrl[j:].copy())
    return left, right


# ---------------------------------------------------------------------------
# curve type


class ParamCurve:
    """A planar parametric curve of kind segment, bezier or bspline.

    Parameters
    ----------
    kind : str
        One of ``"segment"``, ``"bezier"``, ``"bspline"``.
    control_points : array_like, shape (n, 2)
    degree : int, optional
        Required for ``bspline``; implied for the other kinds.
    knots : array_like, optional
        Clamped non-decreasing knot vector, required iff kind is bspline.
    """

    __slots__ = ("kind", "degree", "knots", "ctrl", "reduced_continuity", "_d1", "_d2")

    def __init__(self, kind, control_points, degree=None, knots=None, *, _allow_c0=False):
        if kind not in KINDS:
            raise SchemaError(f"unknown curve kind {kind!r}", field="kind")
        ctrl = np.atleast_2d(np.asarray(control_points, dtype=float))
        if ctrl.ndim != 2 or ctrl.shape[1] != 2:
            raise SchemaError("control points must be an (n, 2) array", field="points")
        if not np.all(np.isfinite(ctrl)):
            raise SchemaError("control points must be finite", field="points")
        reduced = False

        if kind == "segment":
            if len(ctrl) != 2:
                raise SchemaError("segment needs exactly 2 control points", field="points")
            degree = 1
            knots = np.array([0.0, 0.0, 1.0, 1.0])
        elif kind == "bezier":
            if degree is None:
                degree = len(ctrl) - 1
            if len(ctrl) != degree + 1:
                raise SchemaError("bezier needs degree+1 control points", field="points")
            if degree < 1:
                raise SchemaError("bezier degree must be >= 1", field="degree")
            knots = np.array([0.0] * (degree + 1) + [1.0] * (degree + 1))
        else:
            if degree is None or knots is None:
                raise SchemaError("bspline needs degree and knots", field="knots")
            knots = np.asarray(knots, dtype=float)
            if len(knots) != len(ctrl) + degree + 1:
                raise SchemaError(
                    "knot count must equal control count + degree + 1", field="knots"
                )
            if np.any(np.diff(knots) < 0):
                raise SchemaError("knots must be non-decreasing", field="knots")
            if np.any(knots[: degree + 1] != knots[0]) or np.any(knots[-degree - 1 :] != knots[-1]):
                raise SchemaError("knots must be clamped", field="knots")
            reduced = self._check_interior_continuity(knots, degree, _allow_c0)

        self.kind = kind
        self.degree = int(degree)
        self.knots = knots
        self.ctrl = ctrl
        self.reduced_continuity = reduced
        self._d1 = None
        self._d2 = None

    @staticmethod
    def _check_interior_continuity(knots, degree, allow_c0):
        """Enforce interior smoothness; returns the reduced-continuity flag.

        Degree >= 3 requires interior multiplicity <= degree-2 (a C^2 curve);
        lower degrees accept simple interior knots but are flagged.  Internal
        constructions (seam-crossing restrictions of closed curves) may relax
        this to multiplicity = degree.
        """
        interior = knots[degree + 1 : -degree - 1]
        if len(interior) == 0:
            return False
        vals, counts = np.unique(interior, return_counts=True)
        if np.any(vals <= knots[0]) or np.any(vals >= knots[-1]):
            raise SchemaError("interior knots must be strictly inside the domain", field="knots")
        max_mult = int(counts.max())
        if max_mult > degree:
            raise SchemaError("interior knot multiplicity exceeds degree", field="knots")
        if allow_c0:
            return max_mult > max(degree - 2, 0)
        if degree >= 3:
            if max_mult > degree - 2:
                raise SchemaError(
                    "interior knot multiplicity breaks the C2 requirement", field="knots"
                )
            return False
        return True  # degree <= 2 with interior knots: accepted, flagged

    # -- basic queries ------------------------------------------------------

    @property
    def domain(self):
        return float(self.knots[self.degree]), float(self.knots[-self.degree - 1])

    @property
    def n_ctrl(self):
        return len(self.ctrl)

    def interior_knots(self):
        return np.unique(self.knots[self.degree + 1 : -self.degree - 1])

    def breakpoints(self):
        """Unique knot values spanning the domain (polynomial piece bounds)."""
        a, b = self.domain
        return np.unique(np.concatenate(([a], self.interior_knots(), [b])))

    def _check_t(self, t):
        a, b = self.domain
        pad = 1e-12 * max(b - a, 1.0)
        tt = np.asarray(t, dtype=float)
        if np.any(tt < a - pad) or np.any(tt > b + pad):
            raise GeometryError(f"parameter {t} outside curve domain [{a}, {b}]")

    def point(self, t):
        """Evaluate the curve; t may be a scalar or a 1-d array."""
        self._check_t(t)
        if np.ndim(t) == 0:
            return deboor_point(self.knots, self.degree, self.ctrl, float(t))
        return np.array([deboor_point(self.knots, self.degree, self.ctrl, float(s)) for s in np.asarray(t)])

    def _deriv_data(self, order):
        if order == 1:
            if self._d1 is None:
                self._d1 = derivative_data(self.knots, self.degree, self.ctrl)
            return self._d1
        if order == 2:
            if self._d2 is None:
                self._d2 = derivative_data(*self._deriv_data(1))
            return self._d2
        raise GeometryError("derivative order must be 1 or 2")

    def deriv(self, t, order=1):
        """Derivative of the stated order; exact hodograph evaluation."""
        self._check_t(t)
        knots, degree, ctrl = self._deriv_data(order)
        if degree < 0 or len(ctrl) == 0:
            zero = np.zeros(2)
            return zero if np.ndim(t) == 0 else np.tile(zero, (len(t), 1))
        if np.ndim(t) == 0:
            return deboor_point(knots, degree, ctrl, float(t))
        return np.array([deboor_point(knots, degree, ctrl, float(s)) for s in np.asarray(t)])

    def bbox(self):
        """Axis-aligned (min, max) corners; contains the curve image."""
        return self.ctrl.min(axis=0), self.ctrl.max(axis=0)

    def bbox_diag(self):
        lo, hi = self.bbox()
        return float(np.hypot(*(hi - lo)))

    def is_closed(self, tol=1e-9):
        a, b = self.domain
        return bool(np.linalg.norm(self.point(a) - self.point(b)) <= tol)

    # -- reparameterizing operations ----------------------------------------

    def restricted(self, t_lo, t_hi):
        """The sub-curve on [t_lo, t_hi], re-clamped to the domain [0, 1]."""
        a, b = self.domain
        if not (t_lo < t_hi):
            raise GeometryError("restriction interval is inverted or empty")
        self._check_t(t_lo)
        self._check_t(t_hi)
        snap = _KNOT_SNAP * max(b - a, 1.0)
        knots, ctrl = self.knots, self.ctrl
        if t_lo > a + snap:
            (_, _), (knots, ctrl) = split_bspline(knots, self.degree, ctrl, t_lo)
        if t_hi < b - snap:
            (knots, ctrl), (_, _) = split_bspline(knots, self.degree, ctrl, t_hi)
        lo, hi = knots[0], knots[-1]
        knots = (knots - lo) / (hi - lo)
        return self._rewrap(knots, ctrl, allow_c0=self.reduced_continuity)

    def _rewrap(self, knots, ctrl, allow_c0=False):
        if len(np.unique(knots)) == 2:  # single polynomial piece
            kind = "segment" if self.degree == 1 and len(ctrl) == 2 else "bezier"
            return ParamCurve(kind, ctrl, degree=self.degree)
        return ParamCurve("bspline", ctrl, degree=self.degree, knots=knots, _allow_c0=allow_c0)

    def cyclic_restricted(self, t_lo, t_hi):
        """Restriction of a closed curve across its seam (t_hi > domain end).

        The two polynomial stretches on either side of the seam are joined
        into one clamped B-spline; the seam becomes an interior knot of full
        C0 multiplicity, so the result may carry a reduced-continuity flag.
        """
        a, b = self.domain
        if not self.is_closed(tol=1e-6 * max(self.bbox_diag(), 1.0)):
            raise GeometryError("cyclic restriction requires a closed curve")
        if not (a <= t_lo < b and b < t_hi <= t_lo + (b - a)):
            raise GeometryError("cyclic restriction interval must wrap the seam once")
        first = self.restricted(t_lo, b)
        t2 = t_hi - (b - a)
        if t2 <= a + _KNOT_SNAP * max(b - a, 1.0):
            return first
        second = self.restricted(a, t2)
        return concatenate_curves(first, second)

    def reversed(self):
        """Same image traversed with the opposite parameterization."""
        knots = self.knots[0] + self.knots[-1] - self.knots[::-1]
        cur = ParamCurve.__new__(ParamCurve)
        cur.kind = self.kind
        cur.degree = self.degree
        cur.knots = np.ascontiguousarray(knots)
        cur.ctrl = np.ascontiguousarray(self.ctrl[::-1])
        cur.reduced_continuity = self.reduced_continuity
        cur._d1 = None
        cur._d2 = None
        return cur

    def __repr__(self):
        return f"ParamCurve({self.kind}, degree={self.degree}, n={self.n_ctrl})"


def concatenate_curves(first, second):
    """Join two same-degree curves end to start into one clamped B-spline.

    The junction knot gets multiplicity = degree (a C0 joint); use only for
    internal constructions such as seam-crossing edges.
    """
    if first.degree != second.degree:
        raise GeometryError("cannot concatenate curves of different degrees")
    d = first.degree
    gap = np.linalg.norm(first.ctrl[-1] - second.ctrl[0])
    scale = max(first.bbox_diag(), second.bbox_diag(), 1.0)
    if gap > 1e-6 * scale:
        raise GeometryError("curve concatenation endpoints do not meet")
    joint = 0.5 * (first.ctrl[-1] + second.ctrl[0])

    len1 = first.knots[-1] - first.knots[0]
    len2 = second.knots[-1] - second.knots[0]
    s = len1 / (len1 + len2)
    k1 = (first.knots - first.knots[0]) / len1 * s
    k2 = s + (second.knots - second.knots[0]) / len2 * (1.0 - s)
    knots = np.concatenate([k1[: -1], k2[d + 1 :]])
    ctrl = np.vstack([first.ctrl[:-1], joint[None, :], second.ctrl[1:]])
    cur = ParamCurve("bspline", ctrl, degree=d, knots=knots, _allow_c0=True)
    return cur


# ---------------------------------------------------------------------------
# free-function operations


def evaluate(curve, t):
    """Point c(t); exact for polynomial pieces up to roundoff."""
    return curve.point(t)


def derivative(curve, t, order=1):
    """First or second derivative vector at t."""
    return curve.deriv(t, order)


def restrict(curve, t_lo, t_hi):
    """Sub-curve on [t_lo, t_hi] reparameterized to [0, 1]."""
    return curve.restricted(t_lo, t_hi)


def bbox(curve):
    return curve.bbox()


def tangent_into_interior(curve, t_lo, t_hi, endpoint):
    """Unit tangent at an endpoint of c|[t_lo, t_hi], pointing into the edge."""
    if endpoint not in ("lo", "hi"):
        raise GeometryError("endpoint must be 'lo' or 'hi'")
    t = t_lo if endpoint == "lo" else t_hi
    v = curve.deriv(t, 1)
    if endpoint == "hi":
        v = -v
    n = np.linalg.norm(v)
    if n <= 1e-14 * max(curve.bbox_diag(), 1.0):
        raise DegenerateTangentError(f"vanishing tangent at t={t}")
    return v / n


def signed_curvature(curve, t):
    """kappa = (x' y'' - y' x'') / |c'|^3."""
    d1 = curve.deriv(t, 1)
    d2 = curve.deriv(t, 2)
    speed = np.hypot(d1[0], d1[1])
    if speed <= 1e-14 * max(curve.bbox_diag(), 1.0):
        raise DegenerateTangentError(f"curvature undefined at t={t}: |c'| = 0")
    return float((d1[0] * d2[1] - d1[1] * d2[0]) / speed**3)


def fit_bspline(params, points, degree, knots, fix_ends=False):
    """Least-squares B-spline fit of sampled points.

    Parameters
    ----------
    params : (m,) parameters in [knots[0], knots[-1]] assigned to the samples
    points : (m, k) sample values
    degree, knots : the clamped spline space to fit in
    fix_ends : bool
        Interpolate the first and last sample exactly (endpoint constraints).
    """
    params = np.asarray(params, dtype=float)
    points = np.asarray(points, dtype=float)
    mat = basis_matrix(knots, degree, params)
    n = mat.shape[1]
    if not fix_ends:
        ctrl, *_ = np.linalg.lstsq(mat, points, rcond=None)
        return ctrl
    rhs = points - np.outer(mat[:, 0], points[0]) - np.outer(mat[:, -1], points[-1])
    inner, *_ = np.linalg.lstsq(mat[:, 1 : n - 1], rhs, rcond=None)
    return np.vstack([points[0], inner, points[-1]])


def uniform_arclength_knots(samples, degree, n_ctrl, sample_params=None):
    """Clamped knot vector on [0, 1] with interior knots at equal arc fractions.

    ``samples`` is the polyline of fitted data points at the given fit
    parameters; interior knots are placed at parameters splitting the chord
    length of the polyline evenly, kept strictly increasing.
    """
    samples = np.asarray(samples, dtype=float)
    m = len(samples)
    if sample_params is None:
        sample_params = np.linspace(0.0, 1.0, m)
    seg = np.linalg.norm(np.diff(samples, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    arc = np.linspace(0.0, 1.0, m) if total <= 0 else cum / total
    n_interior = n_ctrl - degree - 1
    if n_interior <= 0:
        return np.array([0.0] * (degree + 1) + [1.0] * (degree + 1))
    fracs = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
    interior = np.interp(fracs, arc, sample_params)
    gap = 1.0 / (4.0 * (n_interior + 1))
    interior = np.clip(interior, gap, 1.0 - gap)
    for i in range(1, len(interior)):  # keep knots simple: C2 fit curves
        interior[i] = max(interior[i], interior[i - 1] + 1e-6)
    return np.concatenate([[0.0] * (degree + 1), interior, [1.0] * (degree + 1)])
