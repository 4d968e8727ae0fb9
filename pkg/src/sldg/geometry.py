"""Geometry kernel: line segments and quadratic parametric arcs.

Every curve is stored as a quadratic parametric arc

    x(t) = ax*t**2 + bx*t + cx,   y(t) = ay*t**2 + by*t + cy,   t in [0, 1],

with straight segments represented by ax = ay = 0.  On top of that live
the predicates and constructions needed by intersection-based remapping:
pairwise curve intersections, point-in-triangle / point-in-parabolic-segment
tests, the signed convex decomposition of a six-node curved triangle, and
clipping of two convex regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, GeometryError

# Parameter padding for "t in [0,1]" checks.
PARAM_TOL = 1e-9
# Vertex merge tolerance, relative to the local diameter.
SNAP_REL = 1e-10
# Side-test padding (closed inclusion), relative to the local scale.
SIDE_REL = 1e-12


@dataclass(slots=True)
class ParametricArc:
    """Quadratic plane curve; doubles as the single edge type.

    ``straight`` edges have zero quadratic coefficients and reduce to the
    segment from ``point(0)`` to ``point(1)``.
    """

    ax: float
    bx: float
    cx: float
    ay: float
    by: float
    cy: float
    _straight: bool = field(default=None, init=False, repr=False, compare=False)

    @classmethod
    def line(cls, p0, p1) -> "ParametricArc":
        return cls(0.0, p1[0] - p0[0], p0[0], 0.0, p1[1] - p0[1], p0[1])

    @classmethod
    def through_points(cls, p0, pm, p1) -> "ParametricArc":
        """Quadratic through p0, pm, p1 at t = 0, 1/2, 1 (exact Lagrange fit)."""
        for q, r in ((p0, pm), (pm, p1), (p0, p1)):
            if q[0] == r[0] and q[1] == r[1]:
                raise DegenerateGeometryError("coincident interpolation points")
        ax = 2.0 * p0[0] - 4.0 * pm[0] + 2.0 * p1[0]
        ay = 2.0 * p0[1] - 4.0 * pm[1] + 2.0 * p1[1]
        bx = -3.0 * p0[0] + 4.0 * pm[0] - p1[0]
        by = -3.0 * p0[1] + 4.0 * pm[1] - p1[1]
        return cls(ax, bx, p0[0], ay, by, p0[1])

    # -- evaluation ---------------------------------------------------------

    def point(self, t):
        return ((self.ax * t + self.bx) * t + self.cx,
                (self.ay * t + self.by) * t + self.cy)

    def velocity(self, t):
        return (2.0 * self.ax * t + self.bx, 2.0 * self.ay * t + self.by)

    @property
    def p0(self):
        return (self.cx, self.cy)

    @property
    def p1(self):
        return (self.ax + self.bx + self.cx, self.ay + self.by + self.cy)

    def chord_length(self) -> float:
        x0, y0 = self.p0
        x1, y1 = self.p1
        return math.hypot(x1 - x0, y1 - y0)

    def is_straight(self, tol: float = 1e-12) -> bool:
        """True when the quadratic terms are negligible against the chord."""
        if tol == 1e-12 and self._straight is not None:
            return self._straight
        scale = max(self.chord_length(), 1e-300)
        out = abs(self.ax) <= tol * scale and abs(self.ay) <= tol * scale
        if tol == 1e-12:
            self._straight = out
        return out

    # -- transforms ---------------------------------------------------------

    def reversed(self) -> "ParametricArc":
        # t -> 1 - t
        return ParametricArc(
            self.ax, -2.0 * self.ax - self.bx, self.ax + self.bx + self.cx,
            self.ay, -2.0 * self.ay - self.by, self.ay + self.by + self.cy)

    def subarc(self, t0: float, t1: float) -> "ParametricArc":
        """Restriction to [t0, t1], reparametrized over [0, 1] (t1 < t0 reverses)."""
        d = t1 - t0
        return ParametricArc(
            self.ax * d * d, (2.0 * self.ax * t0 + self.bx) * d,
            (self.ax * t0 + self.bx) * t0 + self.cx,
            self.ay * d * d, (2.0 * self.ay * t0 + self.by) * d,
            (self.ay * t0 + self.by) * t0 + self.cy)

    def bbox(self):
        """Tight axis-aligned box of the arc over t in [0, 1]."""
        xs = [self.cx, self.ax + self.bx + self.cx]
        ys = [self.cy, self.ay + self.by + self.cy]
        if self.ax != 0.0:
            t = -self.bx / (2.0 * self.ax)
            if 0.0 < t < 1.0:
                xs.append((self.ax * t + self.bx) * t + self.cx)
        if self.ay != 0.0:
            t = -self.by / (2.0 * self.ay)
            if 0.0 < t < 1.0:
                ys.append((self.ay * t + self.by) * t + self.cy)
        return (min(xs), min(ys), max(xs), max(ys))

    def shift_scale(self, x0: float, y0: float, inv_scale: float) -> "ParametricArc":
        """Coefficients of the arc expressed in ((x-x0), (y-y0)) * inv_scale."""
        return ParametricArc(
            self.ax * inv_scale, self.bx * inv_scale, (self.cx - x0) * inv_scale,
            self.ay * inv_scale, self.by * inv_scale, (self.cy - y0) * inv_scale)


# Spec-facing aliases: a Line edge is a straight-flagged arc.
Edge = ParametricArc


def line_edge(p0, p1) -> ParametricArc:
    return ParametricArc.line(p0, p1)


def arc_through_3_points(p0, pm, p1) -> ParametricArc:
    return ParametricArc.through_points(p0, pm, p1)


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class ConvexRegion:
    """Closed CCW loop of edges bounding a convex region."""

    edges: list
    _area: float = field(default=float("nan"), repr=False)
    _bbox: tuple = field(default=None, init=False, repr=False, compare=False)
    _interior: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.edges) < 2:
            raise DegenerateGeometryError("a closed region needs at least 2 edges")

    @property
    def vertices(self):
        return [e.p0 for e in self.edges]

    def signed_area(self) -> float:
        """Exact boundary integral (1/2) * closed-loop (x dy - y dx)."""
        if math.isnan(self._area):
            total = 0.0
            for e in self.edges:
                # integrand x*y' - y*x' is quadratic in t; integrate exactly
                q2 = e.ay * e.bx - e.ax * e.by
                q1 = 2.0 * (e.ay * e.cx - e.ax * e.cy)
                q0 = e.by * e.cx - e.bx * e.cy
                total += q2 / 3.0 + q1 / 2.0 + q0
            self._area = 0.5 * total
        return self._area

    @property
    def area(self) -> float:
        return self.signed_area()

    def bbox(self):
        if self._bbox is None:
            boxes = [e.bbox() for e in self.edges]
            self._bbox = (min(b[0] for b in boxes), min(b[1] for b in boxes),
                          max(b[2] for b in boxes), max(b[3] for b in boxes))
        return self._bbox

    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bbox()
        return math.hypot(x1 - x0, y1 - y0)

    def interior_point(self):
        # mean of edge midpoints: strictly interior even for two-edge
        # (arc + chord) regions, where the vertex average sits on the chord
        if self._interior is None:
            n = len(self.edges)
            sx = sy = 0.0
            for e in self.edges:
                mx, my = e.point(0.5)
                sx += mx
                sy += my
            self._interior = (sx / n, sy / n)
        return self._interior

    @classmethod
    def from_polygon(cls, pts) -> "ConvexRegion":
        n = len(pts)
        return cls([ParametricArc.line(pts[i], pts[(i + 1) % n]) for i in range(n)])


@dataclass(slots=True)
class SignedPiece:
    region: ConvexRegion
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")


@dataclass(slots=True)
class ParabolicSegment:
    """Region between a non-straight arc and its chord."""

    arc: ParametricArc

    @property
    def chord(self) -> ParametricArc:
        return ParametricArc.line(self.arc.p0, self.arc.p1)

    @property
    def apex(self):
        return self.arc.point(0.5)

    def region(self) -> ConvexRegion:
        """CCW boundary of the segment (arc side first when it runs CCW)."""
        x0, y0 = self.arc.p0
        x1, y1 = self.arc.p1
        mx, my = self.apex
        # apex left of the chord => chord->arc-reversed runs CCW
        if (x1 - x0) * (my - y0) - (y1 - y0) * (mx - x0) > 0.0:
            return ConvexRegion([ParametricArc.line((x0, y0), (x1, y1)),
                                 self.arc.reversed()])
        return ConvexRegion([self.arc, ParametricArc.line((x1, y1), (x0, y0))])


# ---------------------------------------------------------------------------
# Intersections
# ---------------------------------------------------------------------------

def _in_range(t: float, tol: float = PARAM_TOL) -> bool:
    return -tol <= t <= 1.0 + tol


def intersect_line_line(e1: ParametricArc, e2: ParametricArc, tol: float = PARAM_TOL):
    """Intersection of two straight edges; [] for parallel (overlap included)."""
    rx, ry = e1.bx, e1.by
    sx, sy = e2.bx, e2.by
    denom = rx * sy - ry * sx
    scale = math.hypot(rx, ry) * math.hypot(sx, sy)
    if abs(denom) <= 1e-14 * max(scale, 1e-300):
        return []
    qpx = e2.cx - e1.cx
    qpy = e2.cy - e1.cy
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * ry - qpy * rx) / denom
    if _in_range(t, tol) and _in_range(u, tol):
        return [((e1.cx + t * rx, e1.cy + t * ry), t, u)]
    return []


def _quadratic_roots(A: float, B: float, C: float, scale: float):
    """Real roots of A t^2 + B t + C, robust for small A (degenerates to linear)."""
    if abs(A) <= 1e-14 * scale:
        if abs(B) <= 1e-14 * scale:
            return []
        return [-C / B]
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (B + math.copysign(sq, B)) if B != 0.0 else -0.5 * sq
    if q == 0.0:
        return [-B / (2.0 * A)]
    r1 = q / A
    r2 = C / q
    if abs(r1 - r2) <= 1e-12 * max(1.0, abs(r1), abs(r2)):
        return [0.5 * (r1 + r2)]
    return [r1, r2]


def intersect_arc_line(arc: ParametricArc, line: ParametricArc, tol: float = PARAM_TOL):
    """Arc-segment intersections as (point, xi_on_arc, eta_on_line)."""
    if arc.is_straight():
        return intersect_line_line(arc, line, tol)
    dx, dy = line.bx, line.by
    A = arc.ax * dy - arc.ay * dx
    B = arc.bx * dy - arc.by * dx
    C = (arc.cx - line.cx) * dy - (arc.cy - line.cy) * dx
    scale = max(abs(A), abs(B), abs(C), 1e-300)
    out = []
    use_x = abs(dx) >= abs(dy)
    for xi in _quadratic_roots(A, B, C, scale):
        if not _in_range(xi, tol):
            continue
        px, py = arc.point(xi)
        eta = (px - line.cx) / dx if use_x else (py - line.cy) / dy
        if _in_range(eta, tol):
            out.append(((px, py), xi, eta))
    return out


def _polish_arc_arc(a1: ParametricArc, a2: ParametricArc, xi: float, eta: float):
    """One or two Newton steps on the 2x2 system x1(xi)=x2(eta), y1(xi)=y2(eta)."""
    for _ in range(2):
        x1, y1 = a1.point(xi)
        x2, y2 = a2.point(eta)
        fx, fy = x1 - x2, y1 - y2
        j11, j21 = a1.velocity(xi)
        j12, j22 = a2.velocity(eta)
        det = -j11 * j22 + j12 * j21
        if abs(det) < 1e-300:
            break
        dxi = (-j22 * fx + j12 * fy) / det
        deta = (-j21 * fx + j11 * fy) / det
        xi -= dxi
        eta -= deta
        if abs(dxi) + abs(deta) < 1e-14:
            break
    return xi, eta


def _arc_arc_quartic(a1: ParametricArc, a2: ParametricArc):
    """Quartic coefficients in eta after eliminating xi (None if the 2x2
    coefficient matrix of the xi powers is singular)."""
    det = a1.ax * a1.by - a1.bx * a1.ay
    scale = max(abs(a1.ax), abs(a1.bx), abs(a1.ay), abs(a1.by), 1e-300) ** 2
    if abs(det) <= 1e-12 * scale:
        return None
    # [xi^2, xi]^T = M^{-1} [alpha(eta), beta(eta)]^T with alpha, beta quadratics
    al = np.array([a2.ax, a2.bx, a2.cx - a1.cx])
    be = np.array([a2.ay, a2.by, a2.cy - a1.cy])
    sq = (a1.by * al - a1.bx * be) / det    # xi^2 = A eta^2 + B eta + C
    ln = (-a1.ay * al + a1.ax * be) / det   # xi   = a eta^2 + b eta + c
    # (a eta^2 + b eta + c)^2 - (A eta^2 + B eta + C) = 0
    quart = np.convolve(ln, ln)
    quart[2:] -= sq
    return quart, ln


def _real_roots(coeffs, imag_tol: float = 1e-9):
    c = np.asarray(coeffs, dtype=float)
    nz = np.flatnonzero(np.abs(c) > 1e-14 * max(np.abs(c).max(), 1e-300))
    if nz.size == 0:
        return None  # identically zero polynomial
    c = c[nz[0]:]
    if c.size == 1:
        return []
    roots = np.roots(c / np.abs(c).max())
    return [r.real for r in roots if abs(r.imag) <= imag_tol * max(1.0, abs(r.real))]


def _sylvester_eta_poly(a1: ParametricArc, a2: ParametricArc):
    """Resultant in eta of the two bivariate differences (degree <= 8)."""
    # p(xi; eta) = A1 xi^2 + B1 xi + C1(eta), with C1 quadratic in eta
    one = np.zeros(3)
    A1x, B1x = one.copy(), one.copy()
    A1x[2], B1x[2] = a1.ax, a1.bx
    C1x = np.array([-a2.ax, -a2.bx, a1.cx - a2.cx])
    A1y, B1y = one.copy(), one.copy()
    A1y[2], B1y[2] = a1.ay, a1.by
    C1y = np.array([-a2.ay, -a2.by, a1.cy - a2.cy])
    z = np.zeros(3)
    rows = [[A1x, B1x, C1x, z], [z, A1x, B1x, C1x],
            [A1y, B1y, C1y, z], [z, A1y, B1y, C1y]]

    def det4(m):
        # cofactor expansion with polynomial arithmetic (np.convolve products)
        def det3(a, b, c, d, e, f, g, h, i):
            return (np.convolve(a, np.convolve(e, i)) - np.convolve(a, np.convolve(f, h))
                    - np.convolve(b, np.convolve(d, i)) + np.convolve(b, np.convolve(f, g))
                    + np.convolve(c, np.convolve(d, h)) - np.convolve(c, np.convolve(e, g)))

        total = None
        for j in range(4):
            sub = det3(*[m[r][k] for r in (1, 2, 3) for k in range(4) if k != j])
            term = np.convolve(m[0][j], sub)
            if j % 2:
                term = -term
            total = term if total is None else total + term
        return total

    return det4(rows)


def intersect_arc_arc(a1: ParametricArc, a2: ParametricArc, tol: float = PARAM_TOL):
    """Arc-arc intersections as (point, xi, eta); up to 4 points.

    Eliminates xi through the 2x2 linear system in (xi^2, xi), yielding a
    quartic in eta solved by companion matrix; a resultant elimination covers
    the singular-matrix case.  Each root gets a Newton polish on the original
    bivariate system.
    """
    if a1.is_straight() and a2.is_straight():
        return intersect_line_line(a1, a2, tol)
    if a1.is_straight():
        pts = intersect_arc_line(a2, a1, tol)
        return [(p, e, x) for (p, x, e) in pts]
    if a2.is_straight():
        return intersect_arc_line(a1, a2, tol)

    scale = max(a1.chord_length(), a2.chord_length(), 1e-300)
    built = _arc_arc_quartic(a1, a2)
    etas = None
    lin = None
    if built is not None:
        quart, lin = built
        etas = _real_roots(quart)
    if etas is None:
        # singular or degenerate elimination: resultant route
        res = _sylvester_eta_poly(a1, a2)
        etas = _real_roots(res)
        if etas is None:
            raise GeometryError("arcs overlap along a common curve")
    out = []
    seen = []
    for eta in etas:
        if not _in_range(eta, 1e-6):
            continue
        if lin is not None:
            xi = (lin[0] * eta + lin[1]) * eta + lin[2]
        else:
            # common root of the two quadratics in xi at this eta
            C1 = a1.cx - a2.point(eta)[0]
            C2 = a1.cy - a2.point(eta)[1]
            den = a1.ax * a1.by - a1.ay * a1.bx
            num = a1.ax * C2 - a1.ay * C1
            if abs(den) > 1e-14 * scale * scale:
                xi = -num / den
            else:
                cands = _quadratic_roots(a1.ax, a1.bx, C1, max(abs(a1.ax), 1e-300))
                if not cands:
                    continue
                xi = min(cands, key=lambda t: abs(a1.point(t)[1] - a2.point(eta)[1]))
        xi, eta = _polish_arc_arc(a1, a2, xi, eta)
        if not (_in_range(xi, tol) and _in_range(eta, tol)):
            continue
        p1 = a1.point(xi)
        p2 = a2.point(eta)
        if math.hypot(p1[0] - p2[0], p1[1] - p2[1]) > 1e-9 * scale:
            continue
        if any(abs(eta - s) <= 1e-9 for s in seen):
            continue
        seen.append(eta)
        out.append((((p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0), xi, eta))
    return out


def intersect_edges(e1: ParametricArc, e2: ParametricArc, tol: float = PARAM_TOL):
    """Dispatch on straightness; returns (point, t_on_e1, t_on_e2) tuples."""
    s1, s2 = e1.is_straight(), e2.is_straight()
    if s1 and s2:
        return intersect_line_line(e1, e2, tol)
    if s2:
        return intersect_arc_line(e1, e2, tol)
    if s1:
        return [(p, e, x) for (p, x, e) in intersect_arc_line(e2, e1, tol)]
    return intersect_arc_arc(e1, e2, tol)


# ---------------------------------------------------------------------------
# Inclusion predicates
# ---------------------------------------------------------------------------

def point_in_triangle(p, tri, tol: float = None) -> bool:
    """Closed inclusion in a CCW triangle via the three edge cross products."""
    (x1, y1), (x2, y2), (x3, y3) = tri
    px, py = p
    scale = max(abs(x2 - x1) + abs(y2 - y1), abs(x3 - x2) + abs(y3 - y2),
                abs(x1 - x3) + abs(y1 - y3))
    eps = (SIDE_REL if tol is None else tol) * scale * scale
    c1 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    c2 = (x3 - x2) * (py - y2) - (y3 - y2) * (px - x2)
    c3 = (x1 - x3) * (py - y3) - (y1 - y3) * (px - x3)
    return c1 >= -eps and c2 >= -eps and c3 >= -eps


def point_in_parabolic_segment(p, seg: ParabolicSegment, tol: float = None) -> bool:
    """Closed inclusion between an arc and its chord.

    Procedure: (i) the point must share the chord-side of the apex; (ii) cast
    the perpendicular through the point toward its chord projection (zero at
    the point, positive at the projection) and count arc crossings at negative
    parameters -- an odd count means the arc closes off the point from the far
    side, i.e. inclusion.  This reproduces the two-intersection "negative
    product" case and the single-root case alike.
    """
    arc = seg.arc
    if arc.is_straight():
        return False
    px, py = p
    x0, y0 = arc.p0
    x1, y1 = arc.p1
    dx, dy = x1 - x0, y1 - y0
    chord = math.hypot(dx, dy)
    eps = (SIDE_REL if tol is None else tol)
    mx, my = seg.apex
    side_apex = dx * (my - y0) - dy * (mx - x0)
    side_p = dx * (py - y0) - dy * (px - x0)
    if abs(side_p) <= eps * chord * chord:
        # on the chord line: inside iff within the base span
        s = ((px - x0) * dx + (py - y0) * dy) / (chord * chord)
        return -PARAM_TOL <= s <= 1.0 + PARAM_TOL
    if side_p * side_apex < 0.0:
        return False
    # perpendicular through p, unit direction toward the chord projection
    sgn = 1.0 if side_apex > 0.0 else -1.0
    ux, uy = sgn * dy / chord, -sgn * dx / chord
    # arc intersections with the infinite perpendicular: cross(u, arc(t)-p)=0
    A = ux * arc.ay - uy * arc.ax
    B = ux * arc.by - uy * arc.bx
    C = ux * (arc.cy - py) - uy * (arc.cx - px)
    scale = max(abs(A), abs(B), abs(C), 1e-300)
    neg = 0
    for xi in _quadratic_roots(A, B, C, scale):
        if not _in_range(xi):
            continue
        qx, qy = arc.point(xi)
        t = (qx - px) * ux + (qy - py) * uy
        if abs(t) <= eps * chord:
            return True  # on the arc itself
        if t < 0.0:
            neg += 1
    return neg % 2 == 1


def _arc_side_form(arc: ParametricArc):
    """Implicit side function of the full parabola carrying the arc.

    Returns g with g(x, y) = 0 on the curve; sign separates the two sides.
    None when the quadratic direction is degenerate (curve is a straight
    line traversed quadratically).
    """
    D = arc.ax * arc.by - arc.ay * arc.bx
    scale = max(abs(arc.ax), abs(arc.ay), 1e-300) * max(abs(arc.bx), abs(arc.by), 1e-300)
    if abs(D) <= 1e-14 * scale:
        return None

    ax, ay = arc.ax, arc.ay

    def g(x, y):
        th = (ax * (y - arc.cy) - ay * (x - arc.cx)) / D
        qx, qy = arc.point(th)
        return ax * (x - qx) + ay * (y - qy)

    return g


def point_in_region(p, region: ConvexRegion, tol: float = None) -> bool:
    """Closed inclusion in a convex CCW region bounded by lines and arcs.

    A negative ``tol`` demands strict inclusion by that relative margin.
    """
    eps_rel = SIDE_REL if tol is None else tol
    px, py = p
    diam = max(region.diameter(), 1e-300)
    ix = iy = None
    for e in region.edges:
        if e.is_straight():
            scale = max(abs(e.bx), abs(e.by), 1e-300) * diam
            if e.bx * (py - e.cy) - e.by * (px - e.cx) < -eps_rel * scale:
                return False
        else:
            g = _arc_side_form(e)
            if g is None:
                x0, y0 = e.p0
                x1, y1 = e.p1
                scale = math.hypot(x1 - x0, y1 - y0) * diam
                if (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) < -eps_rel * scale:
                    return False
                continue
            if ix is None:
                ix, iy = region.interior_point()
            gi = g(ix, iy)
            gp = g(px, py)
            scale = max(abs(gi), 1e-300)
            if gp * math.copysign(1.0, gi) < -eps_rel * scale:
                return False
    return True


# ---------------------------------------------------------------------------
# CCW ordering
# ---------------------------------------------------------------------------

def order_ccw(points, center=None):
    """Sort points CCW by polar angle about the vertex centroid.

    Ties are broken by radius, then input index.  Raises for all-collinear
    input.
    """
    idx = order_ccw_indices(points, center)
    return [points[i] for i in idx]


def order_ccw_indices(points, center=None):
    n = len(points)
    if n < 3:
        raise DegenerateGeometryError("need at least 3 points")
    if center is None:
        cx = sum(p[0] for p in points) / n
        cy = sum(p[1] for p in points) / n
    else:
        cx, cy = center
    keys = []
    spread = 0.0
    for i, (x, y) in enumerate(points):
        dx, dy = x - cx, y - cy
        keys.append((math.atan2(dy, dx), math.hypot(dx, dy), i))
        spread = max(spread, abs(dx) + abs(dy))
    # collinearity check against the first off-center direction
    ref = None
    collinear = True
    for x, y in points:
        dx, dy = x - cx, y - cy
        if ref is None:
            if abs(dx) + abs(dy) > 1e-14 * max(spread, 1e-300):
                ref = (dx, dy)
            continue
        if abs(ref[0] * dy - ref[1] * dx) > 1e-12 * max(spread, 1e-300) ** 2:
            collinear = False
            break
    if collinear:
        raise DegenerateGeometryError("points are collinear")
    keys.sort()
    return [k[2] for k in keys]


# ---------------------------------------------------------------------------
# Convex decomposition of a six-node curved triangle
# ---------------------------------------------------------------------------

def convex_partition_tria6(nodes, straight_tol: float = 1e-9,
                           validate: bool = False):
    """Signed convex pieces of the curved triangle given by six nodes.

    ``nodes`` = 3 CCW corners followed by the midside nodes of edges
    (0,1), (1,2), (2,0).  The corner triangle is always a "+" piece; each
    curved edge adds its parabolic segment with "+" when the midside node
    bulges outward and "-" when it bulges inward.
    """
    if len(nodes) != 6:
        raise ValueError("expected 6 nodes")
    c = nodes[:3]
    mids = nodes[3:]
    area2 = ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1])
             - (c[1][1] - c[0][1]) * (c[2][0] - c[0][0]))
    if area2 <= 0.0:
        raise GeometryError("corner triangle is degenerate or flipped")
    pieces = [SignedPiece(ConvexRegion.from_polygon(list(c)), +1)]
    arcs = []
    for k in range(3):
        pa, pb = c[k], c[(k + 1) % 3]
        m = mids[k]
        dx, dy = pb[0] - pa[0], pb[1] - pa[1]
        ex, ey = m[0] - 0.5 * (pa[0] + pb[0]), m[1] - 0.5 * (pa[1] + pb[1])
        dev = dx * ey - dy * ex
        len2 = dx * dx + dy * dy
        if abs(dev) <= straight_tol * len2:
            arcs.append(ParametricArc.line(pa, pb))
            continue
        arc = ParametricArc.through_points(pa, m, pb)
        arcs.append(arc)
        sign = +1 if dev < 0.0 else -1  # right of the CCW edge = outward
        pieces.append(SignedPiece(ParabolicSegment(arc).region(), sign))
    if validate:
        for i in range(3):
            for j in range(i + 1, 3):
                for (_, t1, t2) in intersect_edges(arcs[i], arcs[j]):
                    interior1 = PARAM_TOL * 10 < t1 < 1.0 - PARAM_TOL * 10
                    interior2 = PARAM_TOL * 10 < t2 < 1.0 - PARAM_TOL * 10
                    if interior1 and interior2:
                        raise GeometryError(
                            "curved boundary self-intersects; step too large")
    return pieces


# ---------------------------------------------------------------------------
# Convex clipping
# ---------------------------------------------------------------------------

class _ClipVertex:
    __slots__ = ("x", "y", "assoc")

    def __init__(self, x, y, assoc):
        self.x = x
        self.y = y
        self.assoc = assoc  # {(side, edge_index): parameter}


def _gap_candidates(u, w, edge_lookup, P, Q):
    """Sub-edges of the original boundaries joining two clip vertices."""
    out = []
    for key in u.assoc:
        if key not in w.assoc:
            continue
        t0, t1 = u.assoc[key], w.assoc[key]
        if abs(t1 - t0) <= PARAM_TOL:
            continue
        cand = edge_lookup[key].subarc(t0, t1)
        mid = cand.point(0.5)
        if point_in_region(mid, P, tol=1e-8) and point_in_region(mid, Q, tol=1e-8):
            out.append((key, cand))
    return out


def _lens_region(verts, edge_lookup, P, Q, snap, scale):
    """Two-vertex intersection bounded by one sub-edge of each boundary."""
    u, w = verts
    for key1, e1 in _gap_candidates(u, w, edge_lookup, P, Q):
        for key2, e2 in _gap_candidates(w, u, edge_lookup, P, Q):
            if key1 == key2:
                continue
            region = ConvexRegion([e1, e2])
            if region.signed_area() > snap * scale:
                return region
    return None


def _region_corner_assocs(region, side):
    """Vertex -> parameters on its two adjacent edges (end of prev, start of next)."""
    n = len(region.edges)
    out = []
    for i in range(n):
        v = region.edges[i].p0
        out.append((v, {(side, (i - 1) % n): 1.0, (side, i): 0.0}))
    return out


def clip_convex(P: ConvexRegion, Q: ConvexRegion, snap_tol: float = None):
    """Intersection of two convex CCW regions; None when it has no area.

    Vertices are boundary-boundary intersections plus either region's corners
    inside the other, merged within the snap tolerance, ordered CCW about
    their centroid, and joined by sub-edges of the original boundaries.
    """
    scale = max(P.diameter(), Q.diameter(), 1e-300)
    snap = (SNAP_REL * scale) if snap_tol is None else snap_tol

    verts: list[_ClipVertex] = []

    def add(x, y, assoc):
        for v in verts:
            if abs(v.x - x) <= snap and abs(v.y - y) <= snap:
                for k, t in assoc.items():
                    v.assoc.setdefault(k, t)
                return
        verts.append(_ClipVertex(x, y, assoc))

    for i, ep in enumerate(P.edges):
        for j, eq in enumerate(Q.edges):
            try:
                hits = intersect_edges(ep, eq)
            except GeometryError:
                hits = []  # overlapping curves: endpoints/corners still register
            for (pt, t1, t2) in hits:
                add(pt[0], pt[1], {("P", i): t1, ("Q", j): t2})
    for v, assoc in _region_corner_assocs(P, "P"):
        if point_in_region(v, Q, tol=1e-9):
            add(v[0], v[1], dict(assoc))
    for v, assoc in _region_corner_assocs(Q, "Q"):
        if point_in_region(v, P, tol=1e-9):
            add(v[0], v[1], dict(assoc))

    edge_lookup = {("P", i): e for i, e in enumerate(P.edges)}
    edge_lookup.update({("Q", j): e for j, e in enumerate(Q.edges)})

    if len(verts) < 3:
        # containment (no transversal boundary crossings) or a two-vertex
        # lens; the interior probe must be STRICTLY inside (negative tol) so
        # tangential contact along a shared boundary does not read as
        # containment
        if (all(point_in_region(v, Q, tol=1e-9) for v in P.vertices)
                and point_in_region(P.interior_point(), Q, tol=-1e-9)):
            return ConvexRegion(list(P.edges))
        if (all(point_in_region(v, P, tol=1e-9) for v in Q.vertices)
                and point_in_region(Q.interior_point(), P, tol=-1e-9)):
            return ConvexRegion(list(Q.edges))
        if len(verts) < 2:
            return None
        return _lens_region(verts, edge_lookup, P, Q, snap, scale)
    try:
        order = order_ccw_indices([(v.x, v.y) for v in verts])
    except DegenerateGeometryError:
        return None
    verts = [verts[i] for i in order]

    out_edges = []
    n = len(verts)
    for k in range(n):
        u = verts[k]
        w = verts[(k + 1) % n]
        if abs(u.x - w.x) <= snap and abs(u.y - w.y) <= snap:
            continue
        cands = _gap_candidates(u, w, edge_lookup, P, Q)
        sub = cands[0][1] if cands else None
        if sub is None:
            # no original edge joins the pair: fall back to the chord, which is
            # correct whenever the gap comes from snapped coincident boundaries
            sub = ParametricArc.line((u.x, u.y), (w.x, w.y))
            mid = sub.point(0.5)
            if not (point_in_region(mid, P, tol=1e-7)
                    and point_in_region(mid, Q, tol=1e-7)):
                raise GeometryError("could not reconstruct clip boundary")
        out_edges.append(sub)

    if len(out_edges) < 2:
        return None
    region = ConvexRegion(out_edges)
    if region.signed_area() <= (snap * scale):
        return None
    return region


def dump_edges_csv(edges, path, samples: int = 32):
    """Debug dump: each edge as a sampled polyline, one row per sample point."""
    with open(path, "w") as fh:
        fh.write("edge,sample,x,y\n")
        for i, e in enumerate(edges):
            for s in range(samples + 1):
                t = s / samples
                x, y = e.point(t)
                fh.write(f"{i},{s},{float(x)!r},{float(y)!r}\n")


# ---------------------------------------------------------------------------
# Cubic inflection predicate
# ---------------------------------------------------------------------------

def inflection_count_cubic(coeffs_x, coeffs_y, t_range=(0.0, 1.0)):
    """Inflection parameters of a parametric cubic within t_range.

    ``coeffs_x``/``coeffs_y`` are (a, b, c, d) for a t^3 + b t^2 + c t + d.
    Inflections are the sign changes of cross(r', r''), whose numerator is
    the quadratic 6(ay bx - ax by) t^2 + 6(ay cx - ax cy) t + 2(by cx - bx cy).
    """
    ax, bx, cx, _ = coeffs_x
    ay, by, cy, _ = coeffs_y
    A = 6.0 * (ay * bx - ax * by)
    B = 6.0 * (ay * cx - ax * cy)
    C = 2.0 * (by * cx - bx * cy)
    scale = max(abs(A), abs(B), abs(C), 1e-300)
    lo, hi = t_range
    roots = [t for t in _quadratic_roots(A, B, C, scale)
             if lo - PARAM_TOL <= t <= hi + PARAM_TOL]
    roots.sort()
    return roots
