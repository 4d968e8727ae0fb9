"""Area integrals of bivariate polynomials over curved regions.

A region bounded by line segments and quadratic arcs is integrated by the
divergence-free pair P = 0, Q(x, y) = int_0^x f(s, y) ds, which turns
``iint_R f dA`` into the oriented boundary integral ``oint Q dy``.  Every
edge integrand is then a univariate polynomial, so a fixed Gauss rule is
exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OrientationError, ParameterError, TopologyError
from .geometry import ConvexRegion, ParametricArc

# Closed-loop tolerance for boundary paths, relative to the path diameter.
CLOSURE_REL = 1e-9


@dataclass(frozen=True)
class GaussRule:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray


def gauss_rule(n: int) -> GaussRule:
    if not 1 <= n <= 16:
        raise ParameterError(f"gauss rule order {n} outside [1, 16]")
    x, w = np.polynomial.legendre.leggauss(n)
    return GaussRule(n, 0.5 * (x + 1.0), 0.5 * w)


_GAUSS_CACHE: dict[int, GaussRule] = {}


def cached_gauss(n: int) -> GaussRule:
    rule = _GAUSS_CACHE.get(n)
    if rule is None:
        rule = gauss_rule(n)
        _GAUSS_CACHE[n] = rule
    return rule


# ---------------------------------------------------------------------------
# Triangle rules (collapsed product Gauss; exact to the requested degree)
# ---------------------------------------------------------------------------

def triangle_rule(degree: int):
    """Barycentric-free rule on the reference triangle {u, v >= 0, u+v <= 1}.

    Returns (points (m, 2), weights (m,)) with sum(weights) = 1/2, exact for
    all polynomials of total degree <= degree.  Built by collapsing a tensor
    Gauss rule through (u, v) -> (u, v (1 - u)).
    """
    n = max(1, (degree + 3) // 2)
    g = cached_gauss(n)
    u = np.repeat(g.nodes, n)
    v = np.tile(g.nodes, n)
    w = np.repeat(g.weights, n) * np.tile(g.weights, n) * (1.0 - u)
    pts = np.column_stack([u, v * (1.0 - u)])
    return pts, w


def map_to_triangle(tri, pts, weights):
    """Map a reference-triangle rule onto the physical triangle ``tri``."""
    tri = np.asarray(tri, dtype=float)
    a = tri[0]
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    jac = e1[0] * e2[1] - e1[1] * e2[0]
    phys = a + np.outer(pts[:, 0], e1) + np.outer(pts[:, 1], e2)
    return phys, weights * jac


# ---------------------------------------------------------------------------
# Dense bivariate polynomials
# ---------------------------------------------------------------------------

class BivariatePoly:
    """Dense coefficients c[p, q] of sum c_pq x^p y^q, total degree <= degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)

    @classmethod
    def zero(cls, degree: int) -> "BivariatePoly":
        return cls(np.zeros((degree + 1, degree + 1)))

    @classmethod
    def from_terms(cls, terms) -> "BivariatePoly":
        """terms: iterable of (p, q, coefficient)."""
        deg = max((p + q for p, q, _ in terms), default=0)
        c = np.zeros((deg + 1, deg + 1))
        for p, q, v in terms:
            c[p, q] += v
        return cls(c)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def __call__(self, x, y):
        return np.polynomial.polynomial.polyval2d(x, y, self.coeffs)

    def partial_x(self) -> "BivariatePoly":
        c = self.coeffs
        out = np.zeros_like(c)
        if c.shape[0] > 1:
            out[:-1, :] = c[1:, :] * np.arange(1, c.shape[0])[:, None]
        return BivariatePoly(out)

    def partial_y(self) -> "BivariatePoly":
        c = self.coeffs
        out = np.zeros_like(c)
        if c.shape[1] > 1:
            out[:, :-1] = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
        return BivariatePoly(out)

    def antiderivative_x(self) -> "BivariatePoly":
        c = self.coeffs
        out = np.zeros((c.shape[0] + 1, c.shape[1] + 1))
        out[1:, :-1] = c / np.arange(1, c.shape[0] + 1)[:, None]
        return BivariatePoly(out)

    def __mul__(self, other: "BivariatePoly") -> "BivariatePoly":
        a, b = self.coeffs, other.coeffs
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
        for p in range(a.shape[0]):
            for q in range(a.shape[1]):
                if a[p, q] != 0.0:
                    out[p:p + b.shape[0], q:q + b.shape[1]] += a[p, q] * b
        return BivariatePoly(out)


def green_antiderivative(f: BivariatePoly) -> BivariatePoly:
    """Q with dQ/dx = f (and P identically zero)."""
    return f.antiderivative_x()


# ---------------------------------------------------------------------------
# Boundary paths and region integrals
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class BoundaryPath:
    """Closed CCW loop of edges."""

    edges: list

    def check_closed(self):
        diam = self.diameter()
        tol = CLOSURE_REL * max(diam, 1e-300)
        n = len(self.edges)
        for i in range(n):
            x0, y0 = self.edges[i].p1
            x1, y1 = self.edges[(i + 1) % n].p0
            if math.hypot(x1 - x0, y1 - y0) > tol:
                raise TopologyError(f"path is open between edges {i} and {(i + 1) % n}")

    def diameter(self) -> float:
        xs = []
        ys = []
        for e in self.edges:
            b = e.bbox()
            xs += [b[0], b[2]]
            ys += [b[1], b[3]]
        return math.hypot(max(xs) - min(xs), max(ys) - min(ys))

    @classmethod
    def from_region(cls, region: ConvexRegion) -> "BoundaryPath":
        return cls(list(region.edges))

    @classmethod
    def from_polygon(cls, pts) -> "BoundaryPath":
        n = len(pts)
        return cls([ParametricArc.line(pts[i], pts[(i + 1) % n]) for i in range(n)])


def _edge_gauss_arrays(edges, n: int):
    """Stacked Gauss samples along each edge: x, y, dy/dt at the nodes."""
    g = cached_gauss(n)
    t = g.nodes
    E = len(edges)
    ax = np.fromiter((e.ax for e in edges), float, E)[:, None]
    bx = np.fromiter((e.bx for e in edges), float, E)[:, None]
    cx = np.fromiter((e.cx for e in edges), float, E)[:, None]
    ay = np.fromiter((e.ay for e in edges), float, E)[:, None]
    by = np.fromiter((e.by for e in edges), float, E)[:, None]
    cy = np.fromiter((e.cy for e in edges), float, E)[:, None]
    x = (ax * t + bx) * t + cx
    y = (ay * t + by) * t + cy
    yp = 2.0 * ay * t + by
    return x, y, yp, g.weights


def integrate_over_region(path: BoundaryPath, f: BivariatePoly, n: int = 8) -> float:
    """oint Q dy over the closed path, Q the x-antiderivative of f.

    Exact for the polynomial degrees used here (f of degree <= 5 composed
    with quadratic edges stays below the n = 8 exactness degree of 15).
    """
    path.check_closed()
    Q = green_antiderivative(f)
    x, y, yp, w = _edge_gauss_arrays(path.edges, n)
    vals = Q(x, y) * yp
    return float((vals @ w).sum())


_ONE = None


def region_area(path: BoundaryPath, n: int = 8) -> float:
    global _ONE
    if _ONE is None:
        _ONE = BivariatePoly(np.ones((1, 1)))
    a = integrate_over_region(path, _ONE, n)
    if a < 0.0:
        raise OrientationError("path is clockwise (negative area)")
    return a
