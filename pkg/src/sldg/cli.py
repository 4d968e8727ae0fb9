"""Command line interface.

    sldg run --problem rotation-gaussian --mesh level:1 --degree 2 \
             --cfl 10 --tfinal 6.2832 --out results/
    sldg converge --problem rotation-gaussian --levels 3 --degree 2
    sldg cfl-sweep --problem swirling-bell --cfls 1,10,100 --tfinal 1
    sldg geom-selftest
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from . import harness
from .harness import ProblemSpec

PROBLEMS = {
    "rotation-gaussian": dict(velocity="rigid-rotation", initial="gaussian",
                              t_final=2.0 * math.pi, cfl=10.0),
    "rotation-shapes": dict(velocity="rigid-rotation",
                            initial="slotted-disk+cone+hump",
                            t_final=2.0 * math.pi, cfl=10.0),
    "rotation-slotted-disk": dict(velocity="rigid-rotation", initial="slotted-disk",
                                  t_final=2.0 * math.pi, cfl=10.0),
    "swirling-bell": dict(velocity="swirling:T=1.5", initial="cosine-bell",
                          t_final=1.5, cfl=10.5),
}


def _spec_from_args(args) -> ProblemSpec:
    base = dict(PROBLEMS[args.problem])
    if args.tfinal is not None:
        base["t_final"] = args.tfinal
        if args.problem == "swirling-bell":
            base["velocity"] = f"swirling:T={args.tfinal}"
    if args.cfl is not None:
        base["cfl"] = args.cfl
    # the circle healer only applies to the built-in disk meshes; arbitrary
    # mesh files may describe other domains
    radius = math.pi if args.mesh.startswith("level:") else None
    return ProblemSpec(mesh=args.mesh, degree=args.degree, weno=args.weno,
                       pp=args.pp, relaxed=args.relaxed, threads=args.threads,
                       domain_radius=radius, **base)


def _add_common(p):
    p.add_argument("--problem", choices=sorted(PROBLEMS), default="rotation-gaussian")
    p.add_argument("--mesh", default="level:0", help="mesh file path or level:N")
    p.add_argument("--degree", type=int, choices=(1, 2), default=2)
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--tfinal", type=float, default=None)
    p.add_argument("--weno", action="store_true", help="enable the WENO limiter")
    p.add_argument("--pp", action="store_true", help="enable the positivity limiter")
    p.add_argument("--relaxed", action="store_true",
                   help="straight upstream edges (comparison mode)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for independent runs (1 = deterministic)")
    p.add_argument("--out", default=None, help="output directory")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sldg")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single benchmark run")
    _add_common(p_run)
    p_run.add_argument("--save-every", type=int, default=0,
                       help="dump the field every N steps")

    p_conv = sub.add_parser("converge", help="mesh refinement study")
    _add_common(p_conv)
    p_conv.add_argument("--levels", type=int, default=3)

    p_cfl = sub.add_parser("cfl-sweep", help="error vs CFL on a fixed mesh")
    _add_common(p_cfl)
    p_cfl.add_argument("--cfls", default="1,10,100")

    p_geo = sub.add_parser("geom-selftest",
                           help="geometry/quadrature oracle suites")
    p_geo.add_argument("--mc-samples", type=int, default=10_000_000)

    p_mesh = sub.add_parser("make-mesh", help="write a circle benchmark mesh")
    p_mesh.add_argument("--rings", type=int, required=True)
    p_mesh.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout)

    if args.command == "geom-selftest":
        checks = __import__("sldg.selftest", fromlist=["run_all"]).run_all(
            mc_samples=args.mc_samples)
        return 0 if all(c.passed for c in checks) else 1

    if args.command == "make-mesh":
        from .mesh import save_mesh, unstructured_disk_mesh
        mesh = unstructured_disk_mesh(args.rings)
        save_mesh(mesh, args.out)
        print(f"wrote {mesh.num_elements} elements to {args.out}")
        return 0

    spec = _spec_from_args(args)
    if args.command == "run":
        res = harness.run(spec, out_dir=args.out, save_every=args.save_every)
        print(f"elements={res.mesh.num_elements} steps={len(res.reports)} "
              f"L1={res.l1_avg:.6e} L2={res.l2_avg:.6e} Linf={res.linf:.6e} "
              f"mass_drift={res.mass_drift:.3e}")
        return 0

    if args.command == "converge":
        out_csv = f"{args.out}/errors.csv" if args.out else None
        rows = harness.converge(spec, range(args.levels), out_csv=out_csv,
                                threads=args.threads)
        print("M        r_max      L1          order   L2          order   "
              "Linf        order")
        for r in rows:
            print(f"{r.elements:<8d} {r.r_max:<10.4g} {r.l1:<11.3e} "
                  f"{r.l1_order:<7.2f} {r.l2:<11.3e} {r.l2_order:<7.2f} "
                  f"{r.linf:<11.3e} {r.linf_order:<7.2f}")
        return 0

    if args.command == "cfl-sweep":
        cfls = [float(c) for c in args.cfls.split(",")]
        out_csv = f"{args.out}/cfl_sweep.csv" if args.out else None
        table = harness.cfl_sweep(spec, cfls, out_csv=out_csv, threads=args.threads)
        print("cfl      L1          L2          Linf")
        for c, l1, l2, li in table:
            print(f"{c:<8.3g} {l1:<11.3e} {l2:<11.3e} {li:<11.3e}")
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
