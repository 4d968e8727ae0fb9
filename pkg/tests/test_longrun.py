"""Opt-in long benchmarks (deselected by default): run with ``pytest -m slow``.

Covers the finest mesh level and the long-horizon stability study, which are
excluded from default acceptance for runtime.
"""

import math

import numpy as np
import pytest

from sldg.harness import ProblemSpec, converge, resolve_mesh, run

pytestmark = pytest.mark.slow


def test_finest_level_keeps_third_order():
    spec = ProblemSpec(velocity="rigid-rotation", initial="gaussian",
                       t_final=2 * math.pi, cfl=10.0, degree=2, mesh="level:2")
    rows = converge(spec, [2, 3],
                    meshes=[resolve_mesh("level:2"), resolve_mesh("level:3")])
    # observed orders fluctuate above 3 on single pairs; guard the floor
    assert 2.5 <= rows[-1].l1_order <= 4.3
    assert rows[-1].l1 < rows[0].l1 / 5.0


def test_long_horizon_stability():
    # 25 revolutions at CFL=1: errors stay bounded and mass stays pinned
    spec = ProblemSpec(velocity="rigid-rotation", initial="gaussian",
                       t_final=50 * math.pi, cfl=1.0, degree=2, mesh="level:1")
    res = run(spec, mesh=resolve_mesh("level:1"))
    assert res.mass_drift <= 1e-10
    assert res.l1_avg < 5e-2
    assert np.isfinite(res.field.coeffs).all()


def test_ten_revolution_shapes_with_limiters():
    # discontinuous data after ten revolutions on the finest mesh: the
    # limiter keeps the cell-average envelope close to the data range and
    # strictly tighter than the unlimited run (detector threshold sweeps
    # show ~0.65 is optimal; pushing it lower over-flags smooth cells and
    # widens the envelope again)
    base = dict(velocity="rigid-rotation", initial="slotted-disk",
                t_final=20 * math.pi, cfl=100.0, degree=2, mesh="level:3")
    mesh = resolve_mesh("level:3")
    lim = run(ProblemSpec(**base, weno=True), mesh=mesh)
    raw = run(ProblemSpec(**base), mesh=mesh)
    a_lim = lim.field.cell_averages()
    a_raw = raw.field.cell_averages()
    assert a_lim.min() > a_raw.min() and a_lim.max() < a_raw.max()
    assert a_lim.min() >= -0.10 and a_lim.max() <= 1.07
    assert lim.mass_drift <= 1e-11
