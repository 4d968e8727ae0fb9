import math

import numpy as np
import pytest

from sldg.dgcore import project_function
from sldg.errors import StepSizeError
from sldg.geometry import convex_partition_tria6
from sldg.mesh import build_aux_grid
from sldg.remap import (LimiterConfig, RemapEngine, clip_signed_pieces,
                        find_overlaps, remap_rhs, sldg_step)
from sldg.selftest import random_tria6
from sldg.transport import (ConstantAdvection, RigidRotation,
                            SwirlingDeformation, TraceConfig, ZeroVelocity,
                            adjoint_sample_points, build_upstream,
                            reconstruct_adjoints, trace_back)


def test_zero_velocity_identity(gaussian_p2):
    new, rep = sldg_step(gaussian_p2, ZeroVelocity(), 0.0, 0.7)
    assert np.abs(new.coeffs - gaussian_p2.coeffs).max() < 1e-13
    assert abs(rep.dmass) < 1e-13 * max(1.0, abs(rep.mass_before))


def test_zero_velocity_single_overlap(coarse_disk):
    grid = build_aux_grid(coarse_disk)
    up = build_upstream(coarse_disk.element_points(7), ZeroVelocity(), 1.0, 0.0,
                        source_id=7)
    recs, total = find_overlaps(up, coarse_disk, grid)
    big = [r for r in recs if abs(r.signed_area()) > 1e-12]
    assert len(big) == 1 and big[0].background_id == 7
    assert abs(total - coarse_disk.areas[7]) < 1e-12


def test_translation_overlap_areas(coarse_disk):
    # a small shift: overlap areas over candidates sum to the element area
    grid = build_aux_grid(coarse_disk)
    vel = ConstantAdvection(0.11, -0.07)
    rr = np.hypot(coarse_disk.centroids[:, 0], coarse_disk.centroids[:, 1])
    j = int(np.argmin(rr))   # central element: upstream fully interior
    up = build_upstream(coarse_disk.element_points(j), vel, 0.5, 0.0, source_id=j)
    recs, total = find_overlaps(up, coarse_disk, grid)
    assert abs(total - coarse_disk.areas[j]) < 1e-12
    assert 1 <= len([r for r in recs if abs(r.signed_area()) > 1e-10]) <= 6


def test_translation_exactness_interior(coarse_basis_p2, coarse_disk):
    P = lambda x, y: 1 + 0.5 * x - 0.3 * y + 0.2 * x * x - 0.1 * x * y + 0.15 * y * y
    f = project_function(coarse_basis_p2, P)
    a, b, dt = 0.3, -0.2, 0.4
    eng = RemapEngine(coarse_basis_p2, ConstantAdvection(a, b),
                      boundary_repair=False)
    new, rep = eng.step(f, 0.0, dt)
    exact = project_function(coarse_basis_p2,
                             lambda x, y: P(x - a * dt, y - b * dt))
    covered = rep.closure_defects < 1e-12
    assert covered.sum() > coarse_disk.num_elements // 2
    assert np.abs(new.coeffs - exact.coeffs)[covered].max() < 1e-10


def test_rotation_exactness_interior(coarse_basis_p2):
    P = lambda x, y: 1 + 0.5 * x - 0.3 * y + 0.2 * x * x - 0.1 * x * y + 0.15 * y * y
    f = project_function(coarse_basis_p2, P)
    th = 0.3
    eng = RemapEngine(coarse_basis_p2, RigidRotation(),
                      trace_config=TraceConfig(substeps=48),
                      domain_radius=math.pi, boundary_repair=False)
    new, rep = eng.step(f, 0.0, th)
    c, s = math.cos(th), math.sin(th)
    exact = project_function(coarse_basis_p2,
                             lambda x, y: P(c * x + s * y, -s * x + c * y))
    covered = rep.closure_defects < 1e-12
    assert np.abs(new.coeffs - exact.coeffs)[covered].max() < 1e-10


def test_engine_matches_scalar_reference(coarse_basis_p2):
    # vectorized engine vs the slow Green's-theorem assembly, repair off
    mesh = coarse_basis_p2.mesh
    g = project_function(coarse_basis_p2,
                         lambda x, y: np.exp(-0.5 * (x * x + y * y)))
    vel = SwirlingDeformation(1.5)
    dt = 0.35
    eng = RemapEngine(coarse_basis_p2, vel, domain_radius=math.pi,
                      boundary_repair=False)
    new, rep = eng.step(g, 0.0, dt)
    cfg = TraceConfig()
    rng = np.random.default_rng(3)
    for j in rng.integers(0, mesh.num_elements, 5):
        j = int(j)
        tri = mesh.element_points(j)
        up = build_upstream(tri, vel, dt, 0.0, cfg, source_id=j)
        recs, _ = find_overlaps(up, mesh, eng.grid)
        traced7 = trace_back(adjoint_sample_points(tri), vel, dt, 0.0, cfg)
        adjs = reconstruct_adjoints(tri, coarse_basis_p2.basis_for(j), traced7)
        rhs = remap_rhs(j, g, recs, adjs)
        assert np.abs(rhs - new.coeffs[j]).max() < 1e-11


def test_mass_conservation_with_and_without_limiters(coarse_basis_p2, gaussian_p2):
    vel = RigidRotation()
    for lim in (LimiterConfig(),
                LimiterConfig(weno_enabled=True, pp_enabled=True)):
        eng = RemapEngine(coarse_basis_p2, vel, domain_radius=math.pi)
        u = gaussian_p2.copy()
        t = 0.0
        m0 = u.total_mass()
        for _ in range(5):
            u, rep = eng.step(u, t, 0.45, lim)
            t += 0.45
            assert abs(rep.dmass) <= 1e-12 * max(1.0, abs(rep.mass_before))
        assert abs(u.total_mass() - m0) <= 1e-11 * max(1.0, abs(m0))


def test_area_closure_per_step(coarse_basis_p2, gaussian_p2):
    eng = RemapEngine(coarse_basis_p2, SwirlingDeformation(1.5),
                      domain_radius=math.pi)
    _, rep = eng.step(gaussian_p2, 0.0, 0.4)
    assert rep.max_closure_defect < 1e-10


def test_step_too_large_raises(coarse_basis_p2, gaussian_p2):
    # a crazy step folds upstream elements; the engine must say which
    eng = RemapEngine(coarse_basis_p2, SwirlingDeformation(100.0),
                      domain_radius=None)
    with pytest.raises(StepSizeError):
        eng.step(gaussian_p2, 0.0, 40.0)


def test_four_sum_synthetic_curved_target():
    # remap machinery with a curved "background" cell: signed-piece clipping
    # reproduces intersection areas when B itself has plus/minus pieces
    rng = np.random.default_rng(10)
    for _ in range(10):
        a_nodes = random_tria6(rng)
        b_nodes = random_tria6(rng)
        pa = convex_partition_tria6([tuple(p) for p in a_nodes])
        pb = convex_partition_tria6([tuple(p) for p in b_nodes])
        clips = clip_signed_pieces(pa, pb)
        mine = sum(s * r.signed_area() for r, s in clips)
        # Monte Carlo of the true intersection
        from sldg.selftest import tria6_membership_counts
        boxes = [p.region.bbox() for p in pa + pb]
        x0 = min(b[0] for b in boxes)
        y0 = min(b[1] for b in boxes)
        x1 = max(b[2] for b in boxes)
        y1 = max(b[3] for b in boxes)
        n = 300_000
        xs = rng.uniform(x0, x1, n)
        ys = rng.uniform(y0, y1, n)
        inside = (tria6_membership_counts(a_nodes, xs, ys)
                  * tria6_membership_counts(b_nodes, xs, ys))
        est = inside.mean() * (x1 - x0) * (y1 - y0)
        sigma = (x1 - x0) * (y1 - y0) * math.sqrt(
            max(inside.mean() * (1 - inside.mean()), 1e-12) / n)
        assert abs(mine - est) < 5 * sigma


def test_straight_upstream_mode_runs(coarse_basis_p2, gaussian_p2):
    eng = RemapEngine(coarse_basis_p2, SwirlingDeformation(1.5),
                      domain_radius=math.pi, straight_upstream=True)
    new, rep = eng.step(gaussian_p2, 0.0, 0.3)
    assert rep.curved_elements == 0
    assert abs(rep.dmass) < 1e-12


def test_step_report_fields(coarse_basis_p2, gaussian_p2):
    new, rep = sldg_step(gaussian_p2, RigidRotation(), 0.0, 0.5,
                         domain_radius=math.pi)
    assert rep.wall_time > 0
    assert rep.mass_before == pytest.approx(gaussian_p2.total_mass())
    assert rep.mass_after == pytest.approx(new.total_mass())
