"""Oracle suites for the geometry and quadrature kernels.

Each check pits a production code path against an independent reference:
straight clipping against a Sutherland-Hodgman polygon clipper, curved
signed areas against Monte Carlo inclusion sampling, intersections against
dense sign-change scanning, and Green's-theorem integrals against adaptive
mapped quadrature.  ``run_all`` powers the ``geom-selftest`` CLI command.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass

import numpy as np

from .geometry import (ConvexRegion, ParabolicSegment, ParametricArc,
                       arc_through_3_points, clip_convex,
                       convex_partition_tria6, intersect_arc_arc,
                       intersect_arc_line, point_in_parabolic_segment)
from .quadrature import BivariatePoly, BoundaryPath, integrate_over_region, region_area

try:
    import numba as _nb
    _HAVE_NUMBA = True
except Exception:
    _HAVE_NUMBA = False


def default_seed() -> int:
    return int(os.environ.get("SLDG_SEED", "20240601"))


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def sutherland_hodgman(subject, clip):
    """Classic convex polygon clipping; vertices CCW."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        cx1, cy1 = clip[i]
        cx2, cy2 = clip[(i + 1) % n]
        if not output:
            return []
        inp = output
        output = []
        sx, sy = inp[-1]

        def inside(px, py):
            return (cx2 - cx1) * (py - cy1) - (cy2 - cy1) * (px - cx1) >= 0.0

        for ex, ey in inp:
            if inside(ex, ey):
                if not inside(sx, sy):
                    output.append(_seg_line_x(sx, sy, ex, ey, cx1, cy1, cx2, cy2))
                output.append((ex, ey))
            elif inside(sx, sy):
                output.append(_seg_line_x(sx, sy, ex, ey, cx1, cy1, cx2, cy2))
            sx, sy = ex, ey
    return output


def _seg_line_x(sx, sy, ex, ey, cx1, cy1, cx2, cy2):
    dcx, dcy = cx1 - cx2, cy1 - cy2
    dpx, dpy = sx - ex, sy - ey
    n1 = cx1 * cy2 - cy1 * cx2
    n2 = sx * ey - sy * ex
    den = dcx * dpy - dcy * dpx
    return ((n1 * dpx - n2 * dcx) / den, (n1 * dpy - n2 * dcy) / den)


def shoelace(pts) -> float:
    a = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        a += x0 * y1 - y0 * x1
    return 0.5 * a


def tria6_membership_counts(nodes, xs, ys):
    """Vectorized signed membership (0/1) for a curved six-node triangle.

    Independent of the scalar predicates: uses cross products for the corner
    triangle and the implicit parabola form for each curved edge segment.
    """
    c = np.asarray(nodes[:3], dtype=float)
    vals = _points_in_triangle(c, xs, ys).astype(np.int64)
    for k in range(3):
        pa, pb, m = nodes[k], nodes[(k + 1) % 3], nodes[3 + k]
        dx, dy = pb[0] - pa[0], pb[1] - pa[1]
        ex, ey = m[0] - 0.5 * (pa[0] + pb[0]), m[1] - 0.5 * (pa[1] + pb[1])
        dev = dx * ey - dy * ex
        if abs(dev) <= 1e-14 * (dx * dx + dy * dy):
            continue
        arc = arc_through_3_points(pa, m, pb)
        inside = _points_in_segment(arc, xs, ys)
        if dev < 0.0:          # bulges outward: additive
            vals += inside
        else:
            vals -= inside
    return vals


def _points_in_triangle(c, xs, ys):
    ok = np.ones(xs.shape, dtype=bool)
    for k in range(3):
        x0, y0 = c[k]
        x1, y1 = c[(k + 1) % 3]
        ok &= (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0) >= 0.0
    return ok


def _points_in_segment(arc: ParametricArc, xs, ys):
    ax, bx, cx = arc.ax, arc.bx, arc.cx
    ay, by, cy = arc.ay, arc.by, arc.cy
    D = ax * by - ay * bx
    x0, y0 = arc.p0
    x1, y1 = arc.p1
    mx, my = arc.point(0.5)
    dx, dy = x1 - x0, y1 - y0
    side = dx * (ys - y0) - dy * (xs - x0)
    side_apex = dx * (my - y0) - dy * (mx - x0)
    half = side * side_apex >= 0.0
    th = (ax * (ys - cy) - ay * (xs - cx)) / D
    gx = xs - ((ax * th + bx) * th + cx)
    gy = ys - ((ay * th + by) * th + cy)
    G = ax * gx + ay * gy
    chx, chy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    thm = (ax * (chy - cy) - ay * (chx - cx)) / D
    Gm = ax * (chx - ((ax * thm + bx) * thm + cx)) + ay * (chy - ((ay * thm + by) * thm + cy))
    return (half & (G * Gm >= 0.0)).astype(np.int64)


def _segment_rows(nodes):
    """Per curved edge: [ax..cy, D, x0, y0, dx, dy, side_apex, Gm, sign]."""
    rows = []
    for k in range(3):
        pa, pb, m = nodes[k], nodes[(k + 1) % 3], nodes[3 + k]
        dx, dy = pb[0] - pa[0], pb[1] - pa[1]
        ex, ey = m[0] - 0.5 * (pa[0] + pb[0]), m[1] - 0.5 * (pa[1] + pb[1])
        dev = dx * ey - dy * ex
        if abs(dev) <= 1e-14 * (dx * dx + dy * dy):
            continue
        arc = arc_through_3_points(pa, m, pb)
        D = arc.ax * arc.by - arc.ay * arc.bx
        mx, my = arc.point(0.5)
        side_apex = dx * (my - pa[1]) - dy * (mx - pa[0])
        chx, chy = 0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])
        thm = (arc.ax * (chy - arc.cy) - arc.ay * (chx - arc.cx)) / D
        Gm = (arc.ax * (chx - ((arc.ax * thm + arc.bx) * thm + arc.cx))
              + arc.ay * (chy - ((arc.ay * thm + arc.by) * thm + arc.cy)))
        sign = 1.0 if dev < 0.0 else -1.0
        rows.append([arc.ax, arc.bx, arc.cx, arc.ay, arc.by, arc.cy,
                     D, pa[0], pa[1], dx, dy, side_apex, Gm, sign])
    return np.asarray(rows, dtype=float).reshape(-1, 14)


if _HAVE_NUMBA:
    @_nb.njit(cache=True)
    def _mc_counts(xs, ys, tri, segs):
        hits = 0
        ssq = 0
        for i in range(xs.size):
            x = xs[i]
            y = ys[i]
            v = 0
            inside = True
            for k in range(3):
                x0 = tri[k, 0]
                y0 = tri[k, 1]
                x1 = tri[(k + 1) % 3, 0]
                y1 = tri[(k + 1) % 3, 1]
                if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) < 0.0:
                    inside = False
                    break
            if inside:
                v += 1
            for s in range(segs.shape[0]):
                ax, bx, cx, ay, by, cy = segs[s, 0:6]
                D = segs[s, 6]
                px, py = segs[s, 7], segs[s, 8]
                dx, dy = segs[s, 9], segs[s, 10]
                side_apex = segs[s, 11]
                Gm = segs[s, 12]
                if (dx * (y - py) - dy * (x - px)) * side_apex < 0.0:
                    continue
                th = (ax * (y - cy) - ay * (x - cx)) / D
                G = (ax * (x - ((ax * th + bx) * th + cx))
                     + ay * (y - ((ay * th + by) * th + cy)))
                if G * Gm >= 0.0:
                    v += int(segs[s, 13])
            hits += v
            ssq += v * v
        return hits, ssq


def mc_region_area(nodes, n_samples: int, rng) -> tuple:
    """Monte Carlo signed area of a curved six-node cell and its sigma."""
    pieces = convex_partition_tria6([tuple(p) for p in nodes])
    boxes = [p.region.bbox() for p in pieces]
    x0 = min(b[0] for b in boxes)
    y0 = min(b[1] for b in boxes)
    x1 = max(b[2] for b in boxes)
    y1 = max(b[3] for b in boxes)
    box_area = (x1 - x0) * (y1 - y0)
    tri = np.asarray(nodes[:3], dtype=float)
    segs = _segment_rows(nodes)
    hits = 0
    ssq = 0.0
    chunk = 2_000_000
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        xs = rng.uniform(x0, x1, m)
        ys = rng.uniform(y0, y1, m)
        if _HAVE_NUMBA:
            h, s2 = _mc_counts(xs, ys, tri, segs)
            hits += h
            ssq += s2
        else:
            v = tria6_membership_counts(nodes, xs, ys)
            hits += int(v.sum())
            ssq += float((v * v).sum())
        done += m
    mean = hits / n_samples
    var = max(ssq / n_samples - mean * mean, 0.0)
    area = box_area * mean
    sigma = box_area * math.sqrt(var / n_samples)
    return area, sigma


def adaptive_region_integral(region: ConvexRegion, f: BivariatePoly,
                             tol: float = 1e-12) -> float:
    """Adaptive tensor-Gauss integration over a star-shaped curved region.

    Maps each boundary edge to a curved fan triangle about an interior point
    and subdivides the (s, theta) unit square until the value settles.
    Independent of the Green's-theorem path.
    """
    ox, oy = region.interior_point()
    gl = np.polynomial.legendre.leggauss(10)
    nodes = 0.5 * (gl[0] + 1.0)
    wts = 0.5 * gl[1]

    def patch(e, s0, s1, t0, t1):
        s = s0 + (s1 - s0) * nodes
        th = t0 + (t1 - t0) * nodes
        S, T = np.meshgrid(s, th, indexing="ij")
        ex = (e.ax * T + e.bx) * T + e.cx
        ey = (e.ay * T + e.by) * T + e.cy
        dex = 2.0 * e.ax * T + e.bx
        dey = 2.0 * e.ay * T + e.by
        X = ox + S * (ex - ox)
        Y = oy + S * (ey - oy)
        jac = S * ((ex - ox) * dey - (ey - oy) * dex)
        W = np.outer(wts, wts) * (s1 - s0) * (t1 - t0)
        return float((f(X, Y) * jac * W).sum())

    def refine(e, s0, s1, t0, t1, whole, depth):
        sm = 0.5 * (s0 + s1)
        tm = 0.5 * (t0 + t1)
        parts = [patch(e, a, b, c, d)
                 for a, b in ((s0, sm), (sm, s1)) for c, d in ((t0, tm), (tm, t1))]
        total = sum(parts)
        if abs(total - whole) <= tol * max(1.0, abs(total)) or depth >= 12:
            return total
        quads = [(a, b, c, d) for a, b in ((s0, sm), (sm, s1))
                 for c, d in ((t0, tm), (tm, t1))]
        return sum(refine(e, a, b, c, d, p, depth + 1)
                   for (a, b, c, d), p in zip(quads, parts))

    total = 0.0
    for e in region.edges:
        whole = patch(e, 0.0, 1.0, 0.0, 1.0)
        total += refine(e, 0.0, 1.0, 0.0, 1.0, whole, 0)
    return total


# ---------------------------------------------------------------------------
# Random generators shared by the suites
# ---------------------------------------------------------------------------

def random_ccw_triangle(rng, min_area=0.05, scale=1.0):
    while True:
        p = rng.uniform(-scale, scale, (3, 2))
        a2 = ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
              - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0]))
        if a2 < 0:
            p = p[[0, 2, 1]]
            a2 = -a2
        if a2 / 2.0 >= min_area:
            return p


def random_tria6(rng, bulge=0.2):
    """Valid curved cell: random triangle with perturbed midside nodes.

    Cells are rejected unless the signed decomposition is disjoint (arcs
    crossing each other or another edge's chord would double-count area in
    the plus/minus identity, which also never happens for traced elements).
    """
    from .geometry import intersect_edges

    while True:
        c = random_ccw_triangle(rng, min_area=0.2)
        nodes = list(map(tuple, c))
        for k in range(3):
            pa, pb = c[k], c[(k + 1) % 3]
            mid = 0.5 * (pa + pb)
            d = pb - pa
            n = np.array([-d[1], d[0]])
            nodes.append(tuple(mid + rng.uniform(-bulge, bulge) * n))
        try:
            pieces = convex_partition_tria6(nodes, validate=True)
        except Exception:
            continue
        arcs = [arc_through_3_points(nodes[k], nodes[3 + k], nodes[(k + 1) % 3])
                for k in range(3)]
        chords = [ParametricArc.line(nodes[k], nodes[(k + 1) % 3]) for k in range(3)]
        disjoint = True
        for k in range(3):
            for m in range(3):
                if k == m:
                    continue
                try:
                    hits = intersect_edges(arcs[k], chords[m])
                except Exception:
                    disjoint = False
                    break
                for (_, t1, t2) in hits:
                    if 1e-6 < t1 < 1 - 1e-6 and 1e-6 < t2 < 1 - 1e-6:
                        disjoint = False
            if not disjoint:
                break
        if not disjoint:
            continue
        signed = sum(p.sign * p.region.signed_area() for p in pieces)
        if signed > 0.05:
            return nodes


def random_clip_region(rng):
    """A curved clip region: random curved cell piece against a triangle."""
    while True:
        nodes = random_tria6(rng)
        pieces = convex_partition_tria6(nodes)
        tri = random_ccw_triangle(rng, min_area=0.3, scale=1.5)
        target = ConvexRegion.from_polygon([tuple(p) for p in tri])
        for piece in pieces:
            region = clip_convex(piece.region, target)
            if region is not None and region.signed_area() > 1e-3:
                return region


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_straight_clipping(n_pairs=1000, seed=None) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    worst = 0.0
    for _ in range(n_pairs):
        a = random_ccw_triangle(rng)
        b = random_ccw_triangle(rng)
        region = clip_convex(ConvexRegion.from_polygon([tuple(p) for p in a]),
                             ConvexRegion.from_polygon([tuple(p) for p in b]))
        mine = region.signed_area() if region is not None else 0.0
        ref_poly = sutherland_hodgman([tuple(p) for p in a], [tuple(p) for p in b])
        ref = shoelace(ref_poly) if len(ref_poly) >= 3 else 0.0
        worst = max(worst, abs(mine - ref))
    ok = worst <= 1e-12
    return CheckResult("straight clipping vs polygon oracle", ok,
                       f"max |area diff| = {worst:.3e} over {n_pairs} pairs",
                       time.perf_counter() - t0)


def check_curved_areas_mc(n_cells=100, n_samples=10_000_000, seed=None) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    worst_ratio = 0.0
    for _ in range(n_cells):
        nodes = random_tria6(rng)
        pieces = convex_partition_tria6([tuple(p) for p in nodes])
        mine = 0.0
        for p in pieces:
            path = BoundaryPath.from_region(p.region)
            mine += p.sign * region_area(path)
        ref, sigma = mc_region_area(nodes, n_samples, rng)
        worst_ratio = max(worst_ratio, abs(mine - ref) / max(sigma, 1e-300))
    ok = worst_ratio <= 4.0
    return CheckResult("curved signed areas vs Monte Carlo", ok,
                       f"max |diff|/sigma = {worst_ratio:.2f} over {n_cells} cells",
                       time.perf_counter() - t0)


def check_intersection_residuals(n_cases=200, seed=None) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    worst = 0.0
    missed = 0
    for _ in range(n_cases):
        a1 = _random_arc(rng)
        a2 = _random_arc(rng)
        line = ParametricArc.line(tuple(rng.uniform(-1.5, 1.5, 2)),
                                  tuple(rng.uniform(-1.5, 1.5, 2)))
        for (pt, xi, eta) in intersect_arc_line(a1, line):
            r = np.hypot(*(np.subtract(a1.point(xi), line.point(eta))))
            worst = max(worst, float(r))
        hits = intersect_arc_arc(a1, a2)
        for (pt, xi, eta) in hits:
            r = np.hypot(*(np.subtract(a1.point(xi), a2.point(eta))))
            worst = max(worst, float(r))
        missed += _missed_crossings(a1, a2, [e for (_, _, e) in hits])
    ok = worst <= 1e-9 and missed == 0
    return CheckResult("intersection residuals and completeness", ok,
                       f"max residual = {worst:.3e}, missed crossings = {missed}",
                       time.perf_counter() - t0)


def _random_arc(rng) -> ParametricArc:
    while True:
        p = rng.uniform(-1.2, 1.2, (3, 2))
        try:
            arc = arc_through_3_points(tuple(p[0]), tuple(p[1]), tuple(p[2]))
        except Exception:
            continue
        if not arc.is_straight(1e-6):
            return arc


def _missed_crossings(a1, a2, found_etas, step=1e-4):
    """Sign changes of the implicit form of a1 along a2, vs reported roots."""
    D = a1.ax * a1.by - a1.ay * a1.bx
    if abs(D) < 1e-12:
        return 0
    etas = np.arange(0.0, 1.0 + step, step)
    x = (a2.ax * etas + a2.bx) * etas + a2.cx
    y = (a2.ay * etas + a2.by) * etas + a2.cy
    th = (a1.ax * (y - a1.cy) - a1.ay * (x - a1.cx)) / D
    G = (a1.ax * (x - ((a1.ax * th + a1.bx) * th + a1.cx))
         + a1.ay * (y - ((a1.ay * th + a1.by) * th + a1.cy)))
    sign_change = np.flatnonzero(np.sign(G[:-1]) * np.sign(G[1:]) < 0)
    missed = 0
    for i in sign_change:
        lo, hi = etas[i], etas[i + 1]
        # the sign change must correspond to a curve point inside [0,1] of a1
        if not (-1e-9 <= th[i] <= 1.0 + 1e-9 or -1e-9 <= th[i + 1] <= 1.0 + 1e-9):
            continue
        if not any(lo - 1e-3 <= e <= hi + 1e-3 for e in found_etas):
            missed += 1
    return missed


def check_green_vs_adaptive(n_regions=100, seed=None, tol=1e-10) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    worst = 0.0
    for _ in range(n_regions):
        region = random_clip_region(rng)
        deg = int(rng.integers(0, 5))
        coeffs = np.zeros((deg + 1, deg + 1))
        for p in range(deg + 1):
            for q in range(deg + 1 - p):
                coeffs[p, q] = rng.uniform(-1, 1)
        f = BivariatePoly(coeffs)
        mine = integrate_over_region(BoundaryPath.from_region(region), f)
        ref = adaptive_region_integral(region, f)
        scale = max(abs(ref), 1e-6)
        worst = max(worst, abs(mine - ref) / scale)
    ok = worst <= tol
    return CheckResult("Green's-theorem integrals vs adaptive reference", ok,
                       f"max rel diff = {worst:.3e} over {n_regions} regions",
                       time.perf_counter() - t0)


def check_segment_predicate(n_cases=300, seed=None) -> CheckResult:
    """Scalar inclusion predicate against the implicit-form oracle."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    bad = 0
    for _ in range(n_cases):
        arc = _random_arc(rng)
        seg = ParabolicSegment(arc)
        b = seg.region().bbox()
        xs = rng.uniform(b[0] - 0.1, b[2] + 0.1, 64)
        ys = rng.uniform(b[1] - 0.1, b[3] + 0.1, 64)
        want = _points_in_segment(arc, xs, ys)
        for x, y, w in zip(xs, ys, want):
            got = point_in_parabolic_segment((x, y), seg)
            # skip points within snap distance of the boundary
            if got != bool(w):
                bad += 1
    ok = bad == 0
    return CheckResult("parabolic segment predicate vs implicit oracle", ok,
                       f"{bad} mismatches over {n_cases * 64} samples",
                       time.perf_counter() - t0)


def run_all(mc_samples=10_000_000, verbose=True):
    checks = [
        check_straight_clipping(),
        check_intersection_residuals(),
        check_segment_predicate(),
        check_green_vs_adaptive(),
        check_curved_areas_mc(n_samples=mc_samples),
    ]
    if verbose:
        for c in checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"[{status}] {c.name}: {c.detail} ({c.seconds:.1f}s)")
    return checks
