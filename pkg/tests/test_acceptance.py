"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Expensive runs (the rotation convergence tables) are shared via module-scoped
fixtures.  Run with ``pytest -v -s tests/test_acceptance.py`` to see the
per-criterion lines.
"""

import math
import time

import numpy as np
import pytest

from sldg.dgcore import MeshBasis, project_function
from sldg.harness import ProblemSpec, converge, resolve_mesh, run
from sldg.remap import RemapEngine, _cell_minima, apply_pp, sldg_step
from sldg.selftest import (check_curved_areas_mc, check_green_vs_adaptive,
                           check_intersection_residuals, check_straight_clipping)
from sldg.transport import (ConstantAdvection, RigidRotation,
                            SwirlingDeformation, TraceConfig, ZeroVelocity,
                            upstream_edge_distance)

PAPER_P2_L1_AT_FINE = 1.52e-5   # rotation benchmark, ~1900-element level


def _report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared expensive runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def meshes():
    return {lv: resolve_mesh(f"level:{lv}") for lv in (0, 1, 2)}


@pytest.fixture(scope="module")
def rotation_tables(meshes):
    tables = {}
    for k in (1, 2):
        spec = ProblemSpec(velocity="rigid-rotation", initial="gaussian",
                           t_final=2 * math.pi, cfl=10.0, degree=k,
                           mesh="level:0")
        tables[k] = converge(spec, [0, 1, 2],
                             meshes=[meshes[0], meshes[1], meshes[2]])
    return tables


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_1_geometry_selftest():
    t0 = time.perf_counter()
    a = check_straight_clipping(n_pairs=1000)
    c = check_intersection_residuals(n_cases=200)
    b = check_curved_areas_mc(n_cells=100, n_samples=10_000_000)
    elapsed = time.perf_counter() - t0
    ok = a.passed and b.passed and c.passed and elapsed <= 120.0
    _report("criterion 1 (geometry oracle suite)", ok,
            f"{a.detail}; {b.detail}; {c.detail}; runtime {elapsed:.0f}s <= 120s")


def test_criterion_2_quadrature_vs_adaptive():
    c = check_green_vs_adaptive(n_regions=100, tol=1e-10)
    _report("criterion 2 (Green's quadrature vs adaptive reference)",
            c.passed, c.detail)


def test_criterion_3_identity_and_exactness(meshes):
    mesh = meshes[0]
    basis = MeshBasis(mesh, 2)
    P = lambda x, y: (1 + 0.5 * x - 0.3 * y + 0.2 * x * x
                      - 0.1 * x * y + 0.15 * y * y)
    f = project_function(basis, P)

    new, rep = sldg_step(f, ZeroVelocity(), 0.0, 0.8)
    dev_id = np.abs(new.coeffs - f.coeffs).max()

    # exactness asserted on elements whose upstream is fully covered (cells
    # at the open boundary have no donor data outside the mesh); the boundary
    # mass repair is off so sliver mass is not rerouted into checked cells
    a, b, dt = 0.3, -0.2, 0.4
    eng = RemapEngine(basis, ConstantAdvection(a, b), boundary_repair=False)
    new_t, rep_t = eng.step(f, 0.0, dt)
    exact_t = project_function(basis, lambda x, y: P(x - a * dt, y - b * dt))
    cov_t = rep_t.closure_defects < 1e-12
    dev_t = np.abs(new_t.coeffs - exact_t.coeffs)[cov_t].max()

    th = 0.35
    eng_r = RemapEngine(basis, RigidRotation(), domain_radius=math.pi,
                        trace_config=TraceConfig(substeps=64),
                        boundary_repair=False)
    new_r, rep_r = eng_r.step(f, 0.0, th)
    cth, sth = math.cos(th), math.sin(th)
    exact_r = project_function(
        basis, lambda x, y: P(cth * x + sth * y, -sth * x + cth * y))
    cov_r = rep_r.closure_defects < 1e-12
    dev_r = np.abs(new_r.coeffs - exact_r.coeffs)[cov_r].max()

    ok = dev_id < 1e-13 and dev_t < 1e-10 and dev_r < 1e-10
    _report("criterion 3 (identity and polynomial exactness)", ok,
            f"V=0 dev {dev_id:.2e} < 1e-13; translation {dev_t:.2e} < 1e-10; "
            f"rotation {dev_r:.2e} < 1e-10 "
            f"({int(cov_t.sum())}/{int(cov_r.sum())} covered cells)")


def test_criterion_4_rotation_convergence(rotation_tables):
    msgs = []
    ok = True
    windows = {1: (1.6, 2.4), 2: (2.5, 3.5)}
    for k in (1, 2):
        rows = rotation_tables[k]
        lo, hi = windows[k]
        l1o, l2o = rows[-1].l1_order, rows[-1].l2_order
        k_ok = lo <= l1o <= hi and lo <= l2o <= hi
        msgs.append(f"P{k} finest-pair orders L1={l1o:.2f} L2={l2o:.2f} "
                    f"in [{lo},{hi}]")
        ok &= k_ok
    fine = rotation_tables[2][-1].l1
    mag_ok = fine <= 5.0 * PAPER_P2_L1_AT_FINE
    msgs.append(f"P2 fine L1={fine:.3e} <= 5 x {PAPER_P2_L1_AT_FINE:.2e}")
    ok &= mag_ok
    _report("criterion 4 (rotation convergence orders)", ok, "; ".join(msgs))


def test_criterion_5_mass_conservation(meshes):
    worst_step = 0.0
    worst_cum = 0.0
    for lim_on in (False, True):
        spec = ProblemSpec(velocity="rigid-rotation", initial="gaussian",
                           t_final=2 * math.pi, cfl=10.0, degree=2,
                           mesh="level:1", weno=lim_on, pp=lim_on)
        res = run(spec, mesh=meshes[1])
        m0 = res.mass_series[0]
        steps = np.abs(np.diff(res.mass_series)).max() / max(1.0, abs(m0))
        cum = res.mass_drift
        worst_step = max(worst_step, steps)
        worst_cum = max(worst_cum, cum)
    ok = worst_step <= 1e-12 and worst_cum <= 1e-11
    _report("criterion 5 (mass conservation, limiters on/off)", ok,
            f"worst per-step {worst_step:.2e} <= 1e-12, "
            f"cumulative {worst_cum:.2e} <= 1e-11")


def test_criterion_6_curvilinear_beats_straight(meshes):
    base = dict(velocity="swirling:T=1.5", initial="cosine-bell",
                t_final=1.5, cfl=10.5, degree=2, mesh="level:2")
    curved = run(ProblemSpec(**base), mesh=meshes[2])
    straight = run(ProblemSpec(**base, relaxed=True), mesh=meshes[2])
    ratio = straight.l1_avg / curved.l1_avg
    ok = ratio > 3.0
    _report("criterion 6 (curved vs straight upstream)", ok,
            f"straight L1 {straight.l1_avg:.3e} / curved L1 "
            f"{curved.l1_avg:.3e} = {ratio:.1f}x > 3x")


def test_criterion_7_large_dt_stability(meshes):
    errs = {}
    lmax = {}
    for cfl in (1.0, 10.0, 100.0):
        spec = ProblemSpec(velocity="swirling:T=1", initial="cosine-bell",
                           t_final=1.0, cfl=cfl, degree=2, mesh="level:0")
        res = run(spec, mesh=meshes[0])
        errs[cfl] = res.l1_avg
        lmax[cfl] = float(np.abs(res.field.cell_averages()).max())
    init_max = 0.45 * math.pi
    bounded = all(v <= 2.0 * init_max for v in lmax.values())
    no_growth = max(errs[10.0], errs[100.0]) <= 2.0 * errs[1.0]
    ok = bounded and no_growth
    _report("criterion 7 (large time-step stability)", ok,
            f"L1 errors {errs[1.0]:.2e} / {errs[10.0]:.2e} / {errs[100.0]:.2e} "
            f"for CFL 1/10/100; cell-average maxima bounded ({bounded})")


def test_criterion_8_limiters(meshes, rotation_tables):
    # positivity on the slotted disk with and without the limiter
    base = dict(velocity="rigid-rotation", initial="slotted-disk",
                t_final=2 * math.pi, cfl=10.0, degree=2, mesh="level:1")
    with_pp = run(ProblemSpec(**base, pp=True), mesh=meshes[1])
    without = run(ProblemSpec(**base), mesh=meshes[1])
    min_pp = float(_cell_minima(with_pp.field).min())
    min_raw = float(_cell_minima(without.field).min())
    pp_ok = min_pp >= -1e-14 and min_raw < 0.0

    # average preservation of the limiter on random quadratics
    basis = MeshBasis(meshes[0], 2)
    rng = np.random.default_rng(5)
    coeffs = rng.normal(size=(meshes[0].num_elements, basis.nk))
    coeffs[:, 0] = np.abs(coeffs[:, 0]) + 0.3
    from sldg.dgcore import DGField
    fld = DGField(basis, coeffs)
    avg0 = fld.cell_averages().copy()
    apply_pp(fld, epsilon=1e-15)
    avg_ok = np.abs(fld.cell_averages() - avg0).max() <= 1e-14

    # the WENO limiter must not perturb smooth accuracy tables (levels that
    # resolve the data; the coarsest level is two cells per bell width)
    weno_ok = True
    details = []
    for lv in (1, 2):
        spec = ProblemSpec(velocity="rigid-rotation", initial="gaussian",
                           t_final=2 * math.pi, cfl=10.0, degree=2,
                           mesh=f"level:{lv}", weno=True)
        res = run(spec, mesh=meshes[lv])
        ref = rotation_tables[2][lv].l1
        same = float(f"{res.l1_avg:.3g}") == float(f"{ref:.3g}")
        weno_ok &= same
        details.append(f"L{lv}: {res.l1_avg:.4e} vs {ref:.4e}")
    ok = pp_ok and avg_ok and weno_ok
    _report("criterion 8 (limiters)", ok,
            f"PP min {min_pp:.2e} >= -1e-14 (raw {min_raw:.2e} < 0); "
            f"averages preserved ({avg_ok}); WENO tables unchanged "
            f"({'; '.join(details)})")


def test_criterion_9_upstream_edge_accuracy(meshes):
    vel = SwirlingDeformation(1.5)
    dists = []
    rmaxs = []
    for lv in (0, 1, 2):
        mesh = meshes[lv]
        dt = 0.5 * mesh.r_max
        worst = 0.0
        for j in range(0, mesh.num_elements, max(1, mesh.num_elements // 300)):
            worst = max(worst, upstream_edge_distance(
                mesh.element_points(j), vel, dt, 0.0, samples=33))
        dists.append(worst)
        rmaxs.append(mesh.r_max)
    order = math.log(dists[0] / dists[-1]) / math.log(rmaxs[0] / rmaxs[-1])
    ok = order >= 2.6
    _report("criterion 9 (upstream edge distance order)", ok,
            f"distances {dists[0]:.2e}/{dists[1]:.2e}/{dists[2]:.2e}, "
            f"observed order {order:.2f} >= 2.6")
