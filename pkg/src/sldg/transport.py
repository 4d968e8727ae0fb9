"""Characteristic tracing and curved upstream elements.

Nodes of an element (3 corners, 3 edge midpoints, barycenter) are traced
backward along dx/dt = V with RK4; each upstream edge is the quadratic
through its three traced nodes, which coincides with the boundary
restriction of the six-node isoparametric (TRIA6) map.  The test function
at the old time level is reconstructed as the polynomial least-squares fit
through the seven traced points, using constancy along characteristics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dgcore import BasisSet, monomial_values, n_coeffs
from .errors import ConditioningError, StepSizeError
from .geometry import ParametricArc, convex_partition_tria6

# Maximum RK4 substep length; large dt is cut into more substeps.
MAX_SUBSTEP = 0.08
# Relative midside deviation below which a traced edge counts as straight.
STRAIGHT_TOL = 1e-7


# ---------------------------------------------------------------------------
# Velocity fields
# ---------------------------------------------------------------------------

class VelocityField:
    """Time-dependent plane velocity; callables get numpy arrays."""

    name = "velocity"

    def __call__(self, x, y, t):
        raise NotImplementedError

    def max_speed_hint(self, radius: float) -> float:
        """Rough bound used only for step-size heuristics."""
        return 1.0


class ZeroVelocity(VelocityField):
    name = "zero"

    def __call__(self, x, y, t):
        z = np.zeros_like(np.asarray(x, dtype=float))
        return z, z.copy()

    def max_speed_hint(self, radius):
        return 0.0


class ConstantAdvection(VelocityField):
    def __init__(self, a: float, b: float):
        self.a = float(a)
        self.b = float(b)
        self.name = f"constant:a={a},b={b}"

    def __call__(self, x, y, t):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.a), np.full_like(x, self.b)

    def max_speed_hint(self, radius):
        return math.hypot(self.a, self.b)


class RigidRotation(VelocityField):
    """(a, b) = (-y, x): counterclockwise rotation about the origin."""

    name = "rigid-rotation"

    def __call__(self, x, y, t):
        return -np.asarray(y, dtype=float), np.asarray(x, dtype=float)

    def max_speed_hint(self, radius):
        return radius


class SwirlingDeformation(VelocityField):
    """Deformational flow that reverses at t = T/2 and returns data at t = T.

    a = -cos^2(x/2) sin(y) g(t),  b = sin(x) cos^2(y/2) g(t),
    g(t) = pi cos(pi t / T).  Tangent to the circle of radius pi.
    """

    def __init__(self, period: float):
        self.period = float(period)
        self.name = f"swirling:T={period}"

    def g(self, t):
        return math.pi * np.cos(math.pi * np.asarray(t) / self.period)

    def __call__(self, x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = self.g(t)
        a = -np.cos(0.5 * x) ** 2 * np.sin(y) * g
        b = np.sin(x) * np.cos(0.5 * y) ** 2 * g
        return a, b

    def max_speed_hint(self, radius):
        return math.pi


def velocity_from_name(spec: str) -> VelocityField:
    """Parse ``rigid-rotation``, ``zero``, ``swirling:T=..``, ``constant:a=..,b=..``."""
    if spec == "rigid-rotation":
        return RigidRotation()
    if spec == "zero":
        return ZeroVelocity()
    if spec.startswith("swirling"):
        period = 1.5
        if ":" in spec:
            for item in spec.split(":", 1)[1].split(","):
                key, _, val = item.partition("=")
                if key.strip() == "T":
                    period = float(val)
        return SwirlingDeformation(period)
    if spec.startswith("constant"):
        a = b = 0.0
        if ":" in spec:
            for item in spec.split(":", 1)[1].split(","):
                key, _, val = item.partition("=")
                if key.strip() == "a":
                    a = float(val)
                elif key.strip() == "b":
                    b = float(val)
        return ConstantAdvection(a, b)
    raise ValueError(f"unknown velocity field {spec!r}")


# ---------------------------------------------------------------------------
# Backward tracing
# ---------------------------------------------------------------------------

@dataclass
class TraceConfig:
    rk_order: int = 4   # fixed; kept for reporting
    substeps: int = 4

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.rk_order != 4:
            raise ValueError("only RK4 is implemented")


def trace_back(points, velocity: VelocityField, t_end: float, t_start: float,
               config: TraceConfig = None) -> np.ndarray:
    """RK4 solution of the characteristic system from t_end back to t_start.

    ``points`` is (..., 2); the substep length is capped so that very large
    steps are subdivided automatically.
    """
    config = config or TraceConfig()
    pts = np.array(points, dtype=float, copy=True)
    span = t_start - t_end                    # negative when tracing backward
    if span == 0.0:
        return pts
    n = max(config.substeps, int(math.ceil(abs(span) / MAX_SUBSTEP)))
    h = span / n
    x = pts[..., 0].copy()
    y = pts[..., 1].copy()
    t = t_end
    for _ in range(n):
        # velocity fields may return views of their inputs; never update in place
        k1x, k1y = velocity(x, y, t)
        k2x, k2y = velocity(x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h)
        k3x, k3y = velocity(x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h)
        k4x, k4y = velocity(x + h * k3x, y + h * k3y, t + h)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        t += h
    pts[..., 0] = x
    pts[..., 1] = y
    return pts


# ---------------------------------------------------------------------------
# TRIA6 shape functions (reference corners (0,0), (1,0), (0,1))
# ---------------------------------------------------------------------------

def tria6_shape_functions(xi, eta) -> np.ndarray:
    """Values of the six quadratic shape functions, shape (..., 6).

    Ordering: corners 1-3, then midsides (1,2), (2,3), (3,1); the functions
    are one at their own node, zero at the others, and sum to one.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    lam = 1.0 - xi - eta
    return np.stack([
        lam * (2.0 * lam - 1.0),
        xi * (2.0 * xi - 1.0),
        eta * (2.0 * eta - 1.0),
        4.0 * xi * lam,
        4.0 * xi * eta,
        4.0 * eta * lam,
    ], axis=-1)


TRIA6_REF_NODES = np.array([
    (0.0, 0.0), (1.0, 0.0), (0.0, 1.0),
    (0.5, 0.0), (0.5, 0.5), (0.0, 0.5),
])


# ---------------------------------------------------------------------------
# Upstream elements
# ---------------------------------------------------------------------------

@dataclass
class UpstreamElement:
    source_id: int
    nodes: np.ndarray               # (6, 2): corners then midsides
    edges: list                     # 3 arcs, corner k -> corner k+1
    pieces: list                    # SignedPiece decomposition
    bbox: tuple

    @property
    def signed_area(self) -> float:
        return sum(p.sign * p.region.signed_area() for p in self.pieces)


def element_six_nodes(tri) -> np.ndarray:
    """Corner and midside coordinates of a straight triangle."""
    tri = np.asarray(tri, dtype=float)
    mids = 0.5 * (tri + np.roll(tri, -1, axis=0))
    return np.vstack([tri, mids])


def build_upstream(tri, velocity: VelocityField, t_new: float, t_old: float,
                   config: TraceConfig = None, source_id: int = -1,
                   straight_tol: float = STRAIGHT_TOL) -> UpstreamElement:
    """Trace one element's six nodes and assemble its curved upstream cell."""
    nodes = trace_back(element_six_nodes(tri), velocity, t_new, t_old, config)
    return upstream_from_nodes(nodes, source_id, straight_tol)


def upstream_from_nodes(nodes, source_id: int = -1,
                        straight_tol: float = STRAIGHT_TOL) -> UpstreamElement:
    nodes = np.asarray(nodes, dtype=float)
    try:
        pieces = convex_partition_tria6(
            [tuple(p) for p in nodes], straight_tol=straight_tol)
    except Exception as exc:
        raise StepSizeError(f"upstream element {source_id} invalid: {exc}") from exc
    edges = []
    for k in range(3):
        pa, pb, m = nodes[k], nodes[(k + 1) % 3], nodes[3 + k]
        dx, dy = pb - pa
        ex, ey = m - 0.5 * (pa + pb)
        if abs(dx * ey - dy * ex) <= straight_tol * (dx * dx + dy * dy):
            edges.append(ParametricArc.line(tuple(pa), tuple(pb)))
        else:
            edges.append(ParametricArc.through_points(tuple(pa), tuple(m), tuple(pb)))
    xs = [b for e in edges for b in (e.bbox()[0], e.bbox()[2])]
    ys = [b for e in edges for b in (e.bbox()[1], e.bbox()[3])]
    return UpstreamElement(source_id, nodes, edges,
                           pieces, (min(xs), min(ys), max(xs), max(ys)))


# ---------------------------------------------------------------------------
# Adjoint (transported test function) reconstruction
# ---------------------------------------------------------------------------

@dataclass
class AdjointPoly:
    """Polynomial in centroid-shifted, scaled coordinates of the host element."""

    centroid: np.ndarray
    scale: float
    coeffs: np.ndarray  # (nk,) in degree-lex monomials

    def __call__(self, x, y):
        xs = (np.asarray(x, dtype=float) - self.centroid[0]) / self.scale
        ys = (np.asarray(y, dtype=float) - self.centroid[1]) / self.scale
        return monomial_values(xs, ys, len(self.coeffs)) @ self.coeffs


def adjoint_sample_points(tri) -> np.ndarray:
    """The seven fit points of an element: six nodes plus the barycenter."""
    tri = np.asarray(tri, dtype=float)
    return np.vstack([element_six_nodes(tri), tri.mean(axis=0, keepdims=True)])


def reconstruct_adjoint(test_values: np.ndarray, traced_points: np.ndarray,
                        basis: BasisSet) -> AdjointPoly:
    """Least-squares polynomial through (traced point, test value) pairs.

    ``test_values`` are the test polynomial's values at the element's seven
    sample points; the fit lives in the element's centered scaled monomials.
    """
    nk = n_coeffs(basis.degree)
    xs = (traced_points[:, 0] - basis.centroid[0]) / basis.scale
    ys = (traced_points[:, 1] - basis.centroid[1]) / basis.scale
    A = monomial_values(xs, ys, nk)
    N = A.T @ A
    try:
        w = np.linalg.solve(N, A.T @ np.asarray(test_values, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"adjoint fit is rank deficient: {exc}") from exc
    return AdjointPoly(basis.centroid, basis.scale, w)


# ---------------------------------------------------------------------------
# Upstream edge accuracy functional
# ---------------------------------------------------------------------------

def reconstruct_adjoints(tri, basis: BasisSet, traced_points: np.ndarray):
    """One transported test polynomial per basis function of the element."""
    pts = adjoint_sample_points(tri)
    values = basis.eval_functions(pts)        # (7, nk)
    nk = n_coeffs(basis.degree)
    xs = (traced_points[:, 0] - basis.centroid[0]) / basis.scale
    ys = (traced_points[:, 1] - basis.centroid[1]) / basis.scale
    A = monomial_values(xs, ys, nk)
    W = np.linalg.solve(A.T @ A, A.T @ values)
    return [AdjointPoly(basis.centroid, basis.scale, W[:, m]) for m in range(nk)]


def upstream_edge_distance(tri, velocity: VelocityField, t_new: float,
                           t_old: float, samples: int = 33,
                           config: TraceConfig = None) -> float:
    """Mean distance between the densely traced edge and its fitted arc.

    Each straight edge of the element is sampled at ``samples`` parameters,
    every sample traced backward, and compared against the quadratic arc at
    the same parameter; the largest per-edge average is returned.
    """
    tri = np.asarray(tri, dtype=float)
    up = build_upstream(tri, velocity, t_new, t_old, config)
    theta = np.linspace(0.0, 1.0, samples)
    worst = 0.0
    for k in range(3):
        pa, pb = tri[k], tri[(k + 1) % 3]
        pts = pa[None, :] + theta[:, None] * (pb - pa)[None, :]
        traced = trace_back(pts, velocity, t_new, t_old, config)
        arc = up.edges[k]
        ax, ay = zip(*(arc.point(t) for t in theta))
        d = np.hypot(traced[:, 0] - np.asarray(ax), traced[:, 1] - np.asarray(ay))
        worst = max(worst, float(d.mean()))
    return worst
