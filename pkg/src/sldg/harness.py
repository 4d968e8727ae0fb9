"""Benchmark driver: problems, CFL time stepping, convergence studies.

Reported L1/L2 table values follow the benchmark convention of domain
averaging (L1 / |Omega|, L2 / sqrt(|Omega|)); the plain integral norms are
kept alongside in the row objects.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field as dfield

import numpy as np

from .dgcore import (DGField, MeshBasis, NormReport,
                     field_difference_norms, project_function, save_field)
from .mesh import Mesh, build_aux_grid, load_mesh, unstructured_disk_mesh
from .quadrature import cached_gauss
from .remap import LimiterConfig, RemapEngine, StepReport
from .transport import TraceConfig, VelocityField, velocity_from_name

log = logging.getLogger("sldg")

LEVEL_RINGS = [4, 7, 14, 27]   # ~160 / 490 / 1960 / 7290 elements
PACKAGED_MESH_DIR = os.path.join(os.path.dirname(__file__), "..", "..", "meshes")


# ---------------------------------------------------------------------------
# Initial conditions (circle benchmarks; radius pi domain)
# ---------------------------------------------------------------------------

def ic_gaussian(x, y):
    return np.exp(-3.0 * (x * x + y * y))


def ic_cosine_bell(x, y):
    r0 = 0.45 * math.pi
    r = np.hypot(x - 0.45 * math.pi, y)
    out = r0 * np.cos(np.minimum(r, r0) * math.pi / (2.0 * r0)) ** 6
    return np.where(r < r0, out, 0.0)


def _slotted_disk(x, y, cx, cy, r0):
    r = np.hypot(x - cx, y - cy)
    inside = r <= r0
    slot = (np.abs(x - cx) <= r0 / 4.0) & (y <= cy + r0 / 2.0)
    return np.where(inside & ~slot, 1.0, 0.0)


def ic_slotted_disk(x, y):
    return _slotted_disk(x, y, 0.0, 0.5 * math.pi, 0.3 * math.pi)


def ic_disk_cone_hump(x, y):
    """Slotted disk, cone and cosine hump (classic composite test shape)."""
    r0 = 0.3 * math.pi
    out = _slotted_disk(x, y, 0.0, 0.5 * math.pi, r0)
    rc = np.hypot(x, y + 0.5 * math.pi)
    out = out + np.where(rc <= r0, 1.0 - rc / r0, 0.0)
    rh = np.hypot(x + 0.5 * math.pi, y)
    out = out + np.where(rh <= r0, 0.25 * (1.0 + np.cos(math.pi * np.minimum(rh, r0) / r0)), 0.0)
    return out


INITIAL_CONDITIONS = {
    "gaussian": ic_gaussian,
    "cosine-bell": ic_cosine_bell,
    "slotted-disk": ic_slotted_disk,
    "slotted-disk+cone+hump": ic_disk_cone_hump,
}


# ---------------------------------------------------------------------------
# Problem specification
# ---------------------------------------------------------------------------

@dataclass
class ProblemSpec:
    velocity: str = "rigid-rotation"
    initial: str = "gaussian"
    t_final: float = 2.0 * math.pi
    cfl: float = 10.0
    degree: int = 2
    mesh: str = "level:0"            # path or "level:N"
    weno: bool = False
    pp: bool = False
    relaxed: bool = False            # straight upstream edges everywhere
    substeps: int = 4
    domain_radius: float = math.pi   # None for general polygon meshes
    threads: int = 1

    def __post_init__(self):
        if self.t_final <= 0.0:
            raise ValueError("t_final must be positive")
        if self.cfl <= 0.0:
            raise ValueError("cfl must be positive")
        if self.initial not in INITIAL_CONDITIONS:
            raise ValueError(f"unknown initial condition {self.initial!r}")

    def make_velocity(self) -> VelocityField:
        return velocity_from_name(self.velocity)

    def limiter_config(self) -> LimiterConfig:
        return LimiterConfig(weno_enabled=self.weno, pp_enabled=self.pp)


def resolve_mesh(spec: str) -> Mesh:
    """Mesh path, or ``level:N`` for the packaged/generated circle meshes."""
    if spec.startswith("level:"):
        level = int(spec.split(":", 1)[1])
        path = os.path.normpath(os.path.join(
            PACKAGED_MESH_DIR, f"circle_level{level}.txt"))
        if os.path.exists(path):
            return load_mesh(path)
        if level < len(LEVEL_RINGS):
            rings = LEVEL_RINGS[level]
        else:
            rings = LEVEL_RINGS[-1] * 2 ** (level - len(LEVEL_RINGS) + 1)
        return unstructured_disk_mesh(rings)
    return load_mesh(spec)


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def compute_dt(mesh: Mesh, velocity: VelocityField, cfl: float, t: float) -> float:
    """CFL * min_j r_j / max over faces of |V . n| at face quadrature nodes.

    Returns inf when the velocity vanishes on every face (caller truncates
    to the remaining time).
    """
    g = cached_gauss(3)
    p0 = mesh.vertices[mesh.edges[:, 0]]
    p1 = mesh.vertices[mesh.edges[:, 1]]
    d = p1 - p0
    length = np.hypot(d[:, 0], d[:, 1])
    nx = d[:, 1] / length
    ny = -d[:, 0] / length
    pts_x = p0[:, None, 0] + g.nodes[None, :] * d[:, None, 0]
    pts_y = p0[:, None, 1] + g.nodes[None, :] * d[:, None, 1]
    a, b = velocity(pts_x, pts_y, t)
    vn = np.abs(a * nx[:, None] + b * ny[:, None]).max()
    if vn <= 0.0:
        return math.inf
    return cfl * float(mesh.inradius.min()) / float(vn)


@dataclass
class RunResult:
    spec: ProblemSpec
    mesh: Mesh
    field: DGField
    initial: DGField
    reports: list
    errors: NormReport
    l1_avg: float
    l2_avg: float
    linf: float
    mass_series: np.ndarray
    time_series: np.ndarray

    @property
    def mass_drift(self) -> float:
        m0 = self.mass_series[0]
        return float(np.abs(self.mass_series - m0).max() / max(1.0, abs(m0)))


def run(problem: ProblemSpec, mesh: Mesh = None, out_dir: str = None,
        save_every: int = 0) -> RunResult:
    """Time loop up to t_final; errors are measured against the initial
    projection (the benchmark flows return the data at t_final)."""
    mesh = mesh or resolve_mesh(problem.mesh)
    basis = MeshBasis(mesh, problem.degree)
    velocity = problem.make_velocity()
    grid = build_aux_grid(mesh)
    engine = RemapEngine(basis, velocity, grid=grid,
                         trace_config=TraceConfig(substeps=problem.substeps),
                         domain_radius=problem.domain_radius,
                         straight_upstream=problem.relaxed)
    limiters = problem.limiter_config()
    u = project_function(basis, INITIAL_CONDITIONS[problem.initial])
    if problem.pp:
        from .remap import apply_pp
        apply_pp(u, limiters.pp_epsilon)
    u0 = u.copy()

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        save_field(u, os.path.join(out_dir, "field_000000.txt"))

    reports: list[StepReport] = []
    masses = [u.total_mass()]
    times = [0.0]
    t = 0.0
    step = 0
    while t < problem.t_final - 1e-13:
        dt = compute_dt(mesh, velocity, problem.cfl, t)
        dt = min(dt, problem.t_final - t)
        u, rep = engine.step(u, t, dt, limiters)
        t += dt
        step += 1
        reports.append(rep)
        masses.append(rep.mass_after)
        times.append(t)
        log.info("step=%d t=%.6g mass=%.15g dmass=%.3e theta_min=%.6g flagged=%d",
                 step, t, rep.mass_after, rep.dmass, rep.theta_min, rep.flagged)
        if out_dir and save_every and step % save_every == 0:
            save_field(u, os.path.join(out_dir, f"field_{step:06d}.txt"))

    err = field_difference_norms(u, u0)
    area = mesh.total_area()
    result = RunResult(problem, mesh, u, u0, reports, err,
                       err.l1 / area, err.l2 / math.sqrt(area), err.linf,
                       np.asarray(masses), np.asarray(times))
    if out_dir:
        save_field(u, os.path.join(out_dir, "field_final.txt"))
        with open(os.path.join(out_dir, "mass.csv"), "w") as fh:
            fh.write("step,t,mass,dmass\n")
            for i in range(len(masses)):
                dm = masses[i] - masses[i - 1] if i else 0.0
                fh.write(f"{i},{float(times[i])!r},{float(masses[i])!r},{float(dm)!r}\n")
        with open(os.path.join(out_dir, "report.txt"), "w") as fh:
            fh.write(_report_text(result))
    return result


def _report_text(res: RunResult) -> str:
    lines = [
        f"velocity={res.spec.velocity} ic={res.spec.initial} degree={res.spec.degree}",
        f"mesh elements={res.mesh.num_elements} r_max={res.mesh.r_max:.6g}",
        f"cfl={res.spec.cfl} t_final={res.spec.t_final} steps={len(res.reports)}",
        f"L1={res.l1_avg:.6e} L2={res.l2_avg:.6e} Linf={res.linf:.6e} (averaged convention)",
        f"mass drift={res.mass_drift:.3e}",
        f"weno={res.spec.weno} pp={res.spec.pp} relaxed={res.spec.relaxed}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Convergence study and CFL sweep
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceRow:
    elements: int
    r_max: float
    l1: float
    l2: float
    linf: float
    l1_order: float = math.nan
    l2_order: float = math.nan
    linf_order: float = math.nan
    result: RunResult = dfield(default=None, repr=False)


def converge(problem: ProblemSpec, levels, out_csv: str = None,
             meshes: list = None, threads: int = 1):
    """One run per level; observed orders from consecutive r_max ratios."""
    levels = list(levels)
    if meshes is None:
        meshes = [resolve_mesh(f"level:{lv}") for lv in levels]

    def run_level(mesh):
        return run(problem, mesh=mesh)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_level, meshes))
    else:
        results = [run_level(m) for m in meshes]

    rows = []
    for res in results:
        rows.append(ConvergenceRow(res.mesh.num_elements, res.mesh.r_max,
                                   res.l1_avg, res.l2_avg, res.linf, result=res))
    for i in range(1, len(rows)):
        ratio = math.log(rows[i - 1].r_max / rows[i].r_max)
        rows[i].l1_order = math.log(rows[i - 1].l1 / rows[i].l1) / ratio
        rows[i].l2_order = math.log(rows[i - 1].l2 / rows[i].l2) / ratio
        rows[i].linf_order = math.log(rows[i - 1].linf / rows[i].linf) / ratio
    if out_csv:
        write_convergence_csv(rows, out_csv)
    return rows


def write_convergence_csv(rows, path):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write("M,r_max,L1,L1_order,L2,L2_order,Linf,Linf_order\n")
        for r in rows:
            fh.write(f"{r.elements},{float(r.r_max)!r},{float(r.l1)!r},{float(r.l1_order)!r},"
                     f"{float(r.l2)!r},{float(r.l2_order)!r},{float(r.linf)!r},{float(r.linf_order)!r}\n")


def cfl_sweep(problem: ProblemSpec, cfls, out_csv: str = None,
              mesh: Mesh = None, threads: int = 1):
    """One run per CFL value on a fixed mesh; returns (cfl, L1, L2, Linf) rows."""
    mesh = mesh or resolve_mesh(problem.mesh)

    def run_one(c):
        import dataclasses
        p = dataclasses.replace(problem, cfl=c)
        res = run(p, mesh=mesh)
        return (c, res.l1_avg, res.l2_avg, res.linf)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            table = list(pool.map(run_one, cfls))
    else:
        table = [run_one(c) for c in cfls]
    if out_csv:
        os.makedirs(os.path.dirname(out_csv) or ".", exist_ok=True)
        with open(out_csv, "w") as fh:
            fh.write("cfl,L1,L2,Linf\n")
            for row in table:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return table
