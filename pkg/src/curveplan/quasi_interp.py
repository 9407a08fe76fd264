"""Local L2 spline projection and spline level-set coefficients.

Every spline coefficient is produced by a small local problem posed on the
support of its basis function: a Gram system for the quasi-interpolant, or
a basis-weighted average for the level-set construction.  Right-hand sides
over an interface are assembled region by region, so integrands that are
only piecewise smooth keep full Gauss accuracy.
"""

from dataclasses import dataclass, field

import numpy as np

from .curves import basis_row, find_span
from .errors import GeometryError
from .quadrature import gauss01, region_tiles
from .splines import SplineFunc2D, composed_field, region_covered_by


@dataclass
class LocalProblem:
    """Diagnostics of one local Gram solve."""

    index: tuple  # (i, j) coefficient index
    dof_window: tuple  # inclusive index ranges ((i0, i1), (j0, j1))
    condition: float
    residual: float


@dataclass
class LlmResult:
    function: SplineFunc2D
    problems: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# shared assembly pieces


def _span_gram_1d(knots, degree):
    """Per-span Gram blocks: list of (u0, u1, first_dof, (d+1)x(d+1) block)."""
    nodes, weights = gauss01(degree + 1)
    out = []
    brk = np.unique(knots)
    for u0, u1 in zip(brk[:-1], brk[1:]):
        first = find_span(knots, degree, 0.5 * (u0 + u1)) - degree
        block = np.zeros((degree + 1, degree + 1))
        for t, w in zip(u0 + (u1 - u0) * nodes, weights * (u1 - u0)):
            _, vals = basis_row(knots, degree, float(t))
            block += w * np.outer(vals, vals)
        out.append((float(u0), float(u1), first, block))
    return out


def _local_gram_1d(span_blocks, lo, hi, dof_lo, dof_hi):
    """Gram of dofs [dof_lo, dof_hi] over the knot interval [lo, hi]."""
    n = dof_hi - dof_lo + 1
    gram = np.zeros((n, n))
    for u0, u1, first, block in span_blocks:
        mid = 0.5 * (u0 + u1)
        if mid <= lo or mid >= hi:
            continue
        for a in range(block.shape[0]):
            ia = first + a
            if not dof_lo <= ia <= dof_hi:
                continue
            for b in range(block.shape[0]):
                ib = first + b
                if dof_lo <= ib <= dof_hi:
                    gram[ia - dof_lo, ib - dof_lo] += block[a, b]
    return gram


def region_element_table(region_set, space, probe_n=2, tol=1e-12):
    """Knot element of every interior region plus its cached tiles.

    Every tile quadrature node of a region must land in one element of the
    space (the containment guarantee of interface drawings); a straddling
    region signals an upstream extraction problem.
    """
    u, _ = gauss01(probe_n)
    out = {}
    for k, region in enumerate(region_set.regions):
        tiles = region_tiles(region, region_set.drawing)
        ids = set()
        for tile in tiles:
            pts, _ = tile.grids(u, u)
            for p in pts.reshape(-1, 2):
                ids.add(space.element_of(float(p[0]), float(p[1]), tol=tol))
        if len(ids) != 1:
            raise GeometryError(
                f"region {k} spans knot elements {sorted(ids)}; "
                "extraction inconsistent with the target space"
            )
        out[k] = (ids.pop(), tiles)
    return out


def _element_first_dofs(space, element):
    """First dof indices (per direction) supported on a knot element."""
    bu, bv = space.breakpoints_u(), space.breakpoints_v()
    su = find_span(space.tu, space.du, 0.5 * (bu[element[0]] + bu[element[0] + 1]))
    sv = find_span(space.tv, space.dv, 0.5 * (bv[element[1]] + bv[element[1] + 1]))
    return su - space.du, sv - space.dv


def _element_moments_plain(f, space, n_u, n_v, elements=None):
    """Per-element blocks of integrals of f * B_ij by plain Gauss quadrature.

    Returns {element: (fu, fv, block)} with block shape (du+1, dv+1).
    """
    bu, bv = space.breakpoints_u(), space.breakpoints_v()
    nodes_u, w_u = gauss01(n_u)
    nodes_v, w_v = gauss01(n_v)
    if elements is None:
        elements = [(iu, iv) for iu, iv, _ in space.elements()]
    out = {}
    for iu, iv in elements:
        u0, u1 = bu[iu], bu[iu + 1]
        v0, v1 = bv[iv], bv[iv + 1]
        us = u0 + (u1 - u0) * nodes_u
        vs = v0 + (v1 - v0) * nodes_v
        rows_u = [basis_row(space.tu, space.du, float(t)) for t in us]
        rows_v = [basis_row(space.tv, space.dv, float(t)) for t in vs]
        fu, fv = rows_u[0][0], rows_v[0][0]
        uu, vv = np.meshgrid(us, vs, indexing="ij")
        vals = np.asarray(f(uu, vv), dtype=float)
        block = np.zeros((space.du + 1, space.dv + 1))
        scale = (u1 - u0) * (v1 - v0)
        for a, (_, bu_vals) in enumerate(rows_u):
            for b, (_, bv_vals) in enumerate(rows_v):
                block += (w_u[a] * w_v[b] * scale * vals[a, b]) * np.outer(
                    bu_vals, bv_vals
                )
        out[(iu, iv)] = (fu, fv, block)
    return out


def _element_moments_regions(f, space, table, n):
    """Like _element_moments_plain but summed region by region.

    ``table`` maps region index -> (element, tiles); regions are integrated
    with their own tiles so kinks of f along region boundaries are safe.
    """
    nodes, w = gauss01(n)
    ww = np.outer(w, w)
    out = {}
    for _, (element, tiles) in sorted(table.items()):
        if element not in out:
            fu, fv = _element_first_dofs(space, element)
            out[element] = (fu, fv, np.zeros((space.du + 1, space.dv + 1)))
        fu, fv, block = out[element]
        for tile in tiles:
            pts, det = tile.grids(nodes, nodes)
            vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
            weight = ww * vals * det
            for a in range(pts.shape[0]):
                for b in range(pts.shape[1]):
                    ru, bu_vals = basis_row(space.tu, space.du, float(pts[a, b, 0]))
                    rv, bv_vals = basis_row(space.tv, space.dv, float(pts[a, b, 1]))
                    if ru != fu or rv != fv:
                        raise GeometryError(
                            "quadrature node escaped its region's knot element"
                        )
                    block += weight[a, b] * np.outer(bu_vals, bv_vals)
    return out


def _elements_in_support(space, i, j):
    """Knot elements contained in the support of basis function (i, j)."""
    bu, bv = space.breakpoints_u(), space.breakpoints_v()
    lo_u, hi_u = space.tu[i], space.tu[i + space.du + 1]
    lo_v, hi_v = space.tv[j], space.tv[j + space.dv + 1]
    out = []
    for iu in range(len(bu) - 1):
        mu = 0.5 * (bu[iu] + bu[iu + 1])
        if not lo_u < mu < hi_u:
            continue
        for iv in range(len(bv) - 1):
            mv = 0.5 * (bv[iv] + bv[iv + 1])
            if lo_v < mv < hi_v:
                out.append((iu, iv))
    return out


# ---------------------------------------------------------------------------
# quasi-interpolant


def llm_project(f, space, regions=None, n_rhs=None):
    """Quasi-interpolant of f by local L2 projections on basis supports.

    For each coefficient index the projection problem G lam = P is solved
    on the support of that basis function, and the coefficient is the entry
    of ``lam`` carrying the index itself.  With ``regions`` given (an
    interface region set), right-hand sides are assembled region by region;
    otherwise by plain per-element quadrature.

    Returns an LlmResult with the spline and per-problem diagnostics.
    """
    du, dv = space.du, space.dv
    if n_rhs is None:
        n_rhs = du + dv + 3

    span_u = _span_gram_1d(space.tu, du)
    span_v = _span_gram_1d(space.tv, dv)
    if regions is not None:
        table = region_element_table(region_set=regions, space=space)
        moments = _element_moments_regions(f, space, table, n_rhs)
    else:
        moments = _element_moments_plain(f, space, n_rhs, n_rhs)

    coeffs = np.zeros((space.nu, space.nv))
    problems = []
    for i in range(space.nu):
        i0, i1 = max(0, i - du), min(space.nu - 1, i + du)
        gu = _local_gram_1d(span_u, space.tu[i], space.tu[i + du + 1], i0, i1)
        for j in range(space.nv):
            j0, j1 = max(0, j - dv), min(space.nv - 1, j + dv)
            gv = _local_gram_1d(span_v, space.tv[j], space.tv[j + dv + 1], j0, j1)
            gram = np.kron(gu, gv)
            ncols = j1 - j0 + 1

            rhs = np.zeros((i1 - i0 + 1) * ncols)
            for element in _elements_in_support(space, i, j):
                if element not in moments:
                    continue
                fu, fv, block = moments[element]
                for a in range(du + 1):
                    ia = fu + a
                    if not i0 <= ia <= i1:
                        continue
                    for b in range(dv + 1):
                        jb = fv + b
                        if j0 <= jb <= j1:
                            rhs[(ia - i0) * ncols + (jb - j0)] += block[a, b]

            try:
                lam = np.linalg.solve(gram, rhs)
            except np.linalg.LinAlgError as exc:
                raise GeometryError(
                    f"singular local Gram matrix at dof {(i, j)}"
                ) from exc
            coeffs[i, j] = lam[(i - i0) * ncols + (j - j0)]
            problems.append(
                LocalProblem(
                    (i, j),
                    ((i0, i1), (j0, j1)),
                    float(np.linalg.cond(gram)),
                    float(np.linalg.norm(gram @ lam - rhs)),
                )
            )
    return LlmResult(SplineFunc2D(space, coeffs), problems)


# ---------------------------------------------------------------------------
# level-set coefficients


@dataclass
class LevelSetField:
    """Basis-weighted averages of a zero-extended interface field."""

    function: SplineFunc2D
    coefficients: np.ndarray
    active: set  # dof indices whose support meets the covered interface
    theta_elements: set  # knot elements of the averaging domain

    def value(self, u, v):
        return self.function.value(u, v)


def level_set_coeffs(delta2, T1, T2, region_set, n_rhs=None):
    """Level-set coefficients p_i of the zero-extended field of delta2.

    p_i = (integral over Theta of B_i * field) / (integral over Theta of
    B_i), where the field is delta2 composed through the two maps inside
    the covered interface and zero outside, and Theta is the union of the
    supports of all basis functions meeting the covered part.  Numerators
    are assembled region by region; denominators by plain element rules.
    """
    space = T1.space
    du, dv = space.du, space.dv
    if n_rhs is None:
        n_rhs = du + dv + 3

    table = region_element_table(region_set, space)
    covered = {
        k: region_covered_by(region_set.regions[k], tiles, T1, T2)
        for k, (element, tiles) in table.items()
    }
    covered_table = {k: v for k, v in table.items() if covered[k]}
    if not covered_table:
        raise GeometryError("no region of the interface is covered by the second map")

    # active dofs: support contains a covered element
    covered_elements = {element for element, _ in covered_table.values()}
    active = set()
    for element in covered_elements:
        fu, fv = _element_first_dofs(space, element)
        for a in range(du + 1):
            for b in range(dv + 1):
                active.add((fu + a, fv + b))

    theta_elements = set()
    for (i, j) in active:
        theta_elements.update(_elements_in_support(space, i, j))

    fld = composed_field(delta2, T1, T2, strict=True)
    numerators = _element_moments_regions(fld, space, covered_table, n_rhs)
    denominators = _element_moments_plain(
        lambda u, v: np.ones_like(np.asarray(u, dtype=float)),
        space,
        max(du, dv) + 1,
        max(du, dv) + 1,
        elements=sorted(theta_elements),
    )

    num = np.zeros((space.nu, space.nv))
    den = np.zeros((space.nu, space.nv))
    for table_src, acc in ((numerators, num), (denominators, den)):
        for element, (fu, fv, block) in table_src.items():
            acc[fu : fu + du + 1, fv : fv + dv + 1] += block

    coeffs = np.zeros((space.nu, space.nv))
    for (i, j) in sorted(active):
        if den[i, j] <= 0:
            raise GeometryError(
                f"zero averaging denominator at dof {(i, j)}; "
                "support disjoint from the averaging domain"
            )
        coeffs[i, j] = num[i, j] / den[i, j]

    return LevelSetField(
        SplineFunc2D(space, coeffs), coeffs, active, theta_elements
    )
