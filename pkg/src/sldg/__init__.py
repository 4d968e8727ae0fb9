"""Conservative semi-Lagrangian discontinuous Galerkin transport on
unstructured triangular meshes, built on intersection-based remapping of
quadratic-curvilinear upstream elements."""

from .dgcore import (BasisSet, DGField, MeshBasis, NormReport, build_basis,
                     error_norms, load_field, project, project_function,
                     save_field, total_mass)
from .geometry import (ConvexRegion, Edge, ParabolicSegment, ParametricArc,
                       SignedPiece, arc_through_3_points, clip_convex,
                       convex_partition_tria6, dump_edges_csv,
                       inflection_count_cubic,
                       intersect_arc_arc, intersect_arc_line,
                       intersect_line_line, order_ccw, point_in_parabolic_segment,
                       point_in_region, point_in_triangle)
from .harness import (ConvergenceRow, ProblemSpec, RunResult, cfl_sweep,
                      compute_dt, converge, resolve_mesh, run)
from .mesh import (AuxGrid, Element, Mesh, Vertex, build_aux_grid,
                   candidates_for_box, disk_mesh, element_metrics, load_mesh,
                   refine_midpoint, save_mesh, unstructured_disk_mesh)
from .quadrature import (BivariatePoly, BoundaryPath, GaussRule, gauss_rule,
                         green_antiderivative, integrate_over_region, region_area,
                         triangle_rule)
from .remap import (LimiterConfig, OverlapRecord, RemapEngine, StepReport,
                    apply_pp, apply_weno, clip_signed_pieces, find_overlaps,
                    sldg_step)
from .transport import (AdjointPoly, ConstantAdvection, RigidRotation,
                        SwirlingDeformation, TraceConfig, UpstreamElement,
                        VelocityField, ZeroVelocity, build_upstream,
                        reconstruct_adjoint, trace_back, tria6_shape_functions,
                        upstream_edge_distance, velocity_from_name)

__version__ = "0.1.0"
