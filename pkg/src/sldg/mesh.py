"""Unstructured triangular meshes: ingestion, refinement, lookup grid.

Storage is array-based: vertex coordinates (nv, 2), corner indices (ne, 3)
in CCW order, plus derived adjacency, per-element metrics and the unique
edge table used to share traced edges between neighbours.  ``Vertex`` and
``Element`` views expose single entries.

Mesh text format (whitespace separated, 0-based indices)::

    nv ne
    x y          (nv lines)
    i0 i1 i2     (ne lines, CCW or auto-reoriented)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateGeometryError, MeshFormatError, ParameterError,
                     TopologyError)


@dataclass(frozen=True)
class Vertex:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Element:
    id: int
    corner_ids: tuple
    neighbor_ids: tuple  # None where a face lies on the boundary
    area: float
    perimeter: float
    inradius_proxy: float


def element_metrics(tri):
    """(area, perimeter, r) with r = 2*area/perimeter for a CCW triangle."""
    (x1, y1), (x2, y2), (x3, y3) = tri
    area = 0.5 * ((x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1))
    if area <= 0.0:
        if area == 0.0 or abs(area) < 1e-300:
            raise DegenerateGeometryError("zero-area triangle")
        raise DegenerateGeometryError("triangle is not CCW")
    per = (math.hypot(x2 - x1, y2 - y1) + math.hypot(x3 - x2, y3 - y2)
           + math.hypot(x1 - x3, y1 - y3))
    return area, per, 2.0 * area / per


class Mesh:
    """Immutable triangulation with adjacency and per-element metrics."""

    def __init__(self, vertices, triangles):
        verts = np.asarray(vertices, dtype=float)
        tris = np.asarray(triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must be (nv, 2)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError("triangles must be (ne, 3)")
        if not np.all(np.isfinite(verts)):
            raise ValueError("non-finite vertex coordinates")
        # normalize orientation to CCW
        p = verts[tris]
        signed2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        flip = signed2 < 0.0
        if np.any(flip):
            tris = tris.copy()
            tris[flip] = tris[flip][:, [0, 2, 1]]
            p = verts[tris]
            signed2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                       - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        if np.any(signed2 <= 0.0):
            bad = int(np.argmax(signed2 <= 0.0))
            raise DegenerateGeometryError(f"element {bad} has zero area")

        self.vertices = verts
        self.triangles = tris
        self.areas = 0.5 * signed2
        e01 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        e12 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        e20 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        self.perimeters = e01 + e12 + e20
        self.inradius = 2.0 * self.areas / self.perimeters
        self.diameters = np.maximum(np.maximum(e01, e12), e20)
        self.centroids = p.mean(axis=1)
        self._build_edges()

    # -- topology -----------------------------------------------------------

    def _build_edges(self):
        tris = self.triangles
        ne = len(tris)
        raw = np.stack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=1)
        flat = raw.reshape(-1, 2)
        lo = flat.min(axis=1)
        hi = flat.max(axis=1)
        key = np.stack([lo, hi], axis=1)
        uniq, inverse, counts = np.unique(key, axis=0, return_inverse=True,
                                          return_counts=True)
        if np.any(counts > 2):
            bad = uniq[np.argmax(counts > 2)]
            raise TopologyError(f"edge {tuple(bad)} shared by more than 2 elements")
        self.edges = uniq                      # (nE, 2) vertex ids, lo < hi
        self.elem_edges = inverse.reshape(ne, 3)
        # +1 when the element traverses the edge lo -> hi
        self.elem_edge_dir = np.where(flat[:, 0] == lo, 1, -1).reshape(ne, 3)

        owner = np.full((len(uniq), 2), -1, dtype=np.int64)
        owner_loc = np.full((len(uniq), 2), -1, dtype=np.int64)
        for j in range(ne):
            for k in range(3):
                e = self.elem_edges[j, k]
                slot = 0 if owner[e, 0] < 0 else 1
                owner[e, slot] = j
                owner_loc[e, slot] = k
        self.edge_elements = owner
        self.neighbors = np.full((ne, 3), -1, dtype=np.int64)
        for e in range(len(uniq)):
            a, b = owner[e]
            if b >= 0:
                self.neighbors[a, owner_loc[e, 0]] = b
                self.neighbors[b, owner_loc[e, 1]] = a
        boundary_mask = owner[:, 1] < 0
        self.boundary_edge_ids = np.flatnonzero(boundary_mask)
        self.boundary_edges = [(int(owner[e, 0]), int(owner_loc[e, 0]))
                               for e in self.boundary_edge_ids]

    # -- accessors -----------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_elements(self) -> int:
        return len(self.triangles)

    @property
    def r_max(self) -> float:
        return float(self.inradius.max())

    def vertex(self, i: int) -> Vertex:
        return Vertex(i, float(self.vertices[i, 0]), float(self.vertices[i, 1]))

    def element(self, j: int) -> Element:
        nb = tuple(int(n) if n >= 0 else None for n in self.neighbors[j])
        return Element(j, tuple(int(c) for c in self.triangles[j]), nb,
                       float(self.areas[j]), float(self.perimeters[j]),
                       float(self.inradius[j]))

    def element_points(self, j: int) -> np.ndarray:
        return self.vertices[self.triangles[j]]

    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def total_area(self) -> float:
        return float(self.areas.sum())

    def bbox(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def load_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = fh.read().splitlines()

    def parse(lineno, n_items, cast):
        if lineno >= len(lines):
            raise MeshFormatError(f"{path}: unexpected end of file at line {lineno + 1}")
        parts = lines[lineno].split()
        if len(parts) < n_items:
            raise MeshFormatError(
                f"{path}:{lineno + 1}: expected {n_items} fields, got {len(parts)}")
        try:
            return [cast(p) for p in parts[:n_items]]
        except ValueError as exc:
            raise MeshFormatError(f"{path}:{lineno + 1}: {exc}") from None

    nv, ne = parse(0, 2, int)
    verts = np.empty((nv, 2))
    for i in range(nv):
        verts[i] = parse(1 + i, 2, float)
    tris = np.empty((ne, 3), dtype=np.int64)
    for j in range(ne):
        tris[j] = parse(1 + nv + j, 3, int)
    if tris.size and (tris.min() < 0 or tris.max() >= nv):
        j = int(np.argmax((tris < 0).any(axis=1) | (tris >= nv).any(axis=1)))
        raise MeshFormatError(f"{path}:{1 + nv + j + 1}: vertex index out of range")
    return Mesh(verts, tris)


def save_mesh(mesh: Mesh, path):
    with open(path, "w") as fh:
        fh.write(f"{mesh.num_vertices} {mesh.num_elements}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")


# ---------------------------------------------------------------------------
# Refinement and generation
# ---------------------------------------------------------------------------

def refine_midpoint(mesh: Mesh, snap_radius: float = None) -> Mesh:
    """Split every element into 4 by joining edge midpoints.

    With ``snap_radius`` set, new midpoints of boundary edges are pushed onto
    the circle of that radius about the origin (used by the disk meshes so
    refinement keeps tracking the curved boundary).
    """
    mids = mesh.edge_midpoints().copy()
    if snap_radius is not None:
        for e in mesh.boundary_edge_ids:
            x, y = mids[e]
            r = math.hypot(x, y)
            if r > 0.0:
                mids[e] = (snap_radius * x / r, snap_radius * y / r)
    nv = mesh.num_vertices
    verts = np.vstack([mesh.vertices, mids])
    tris = []
    for j in range(mesh.num_elements):
        v0, v1, v2 = mesh.triangles[j]
        m01 = nv + mesh.elem_edges[j, 0]
        m12 = nv + mesh.elem_edges[j, 1]
        m20 = nv + mesh.elem_edges[j, 2]
        tris += [[v0, m01, m20], [v1, m12, m01], [v2, m20, m12], [m01, m12, m20]]
    return Mesh(verts, np.asarray(tris, dtype=np.int64))


def unstructured_disk_mesh(rings: int, radius: float = math.pi,
                           jitter: float = 0.3, seed: int = 20240601,
                           smooth: int = 3) -> Mesh:
    """Quasi-uniform unstructured disk triangulation with 10*rings**2 elements.

    Ring-arranged seed points are jittered (boundary points stay exactly on
    the circle), Delaunay-triangulated, and relaxed by a few neighbour
    averaging sweeps.  The jitter kills the rotational symmetry of the
    structured mesh, which otherwise makes projection errors accumulate
    coherently in rotating flows.  Deterministic per (rings, seed).
    """
    from scipy.spatial import Delaunay

    rng = np.random.default_rng(seed + rings)
    pts = [(0.0, 0.0)]
    for k in range(1, rings + 1):
        nk = 10 * k
        r = radius * k / rings
        for i in range(nk):
            a = 2.0 * math.pi * (i + (rng.uniform(-0.3, 0.3) if k < rings else 0.0)) / nk
            rr = r if k == rings else r + rng.uniform(-jitter, jitter) * radius / rings
            pts.append((rr * math.cos(a), rr * math.sin(a)))
    pts = np.asarray(pts)
    for _ in range(smooth):
        tri = Delaunay(pts)
        acc = np.zeros_like(pts)
        cnt = np.zeros(len(pts))
        for a in range(3):
            for b in range(3):
                if a != b:
                    np.add.at(acc, tri.simplices[:, a], pts[tri.simplices[:, b]])
                    np.add.at(cnt, tri.simplices[:, a], 1.0)
        interior = np.hypot(pts[:, 0], pts[:, 1]) < radius - 1e-9
        pts = pts.copy()
        pts[interior] = acc[interior] / cnt[interior, None]
    return Mesh(pts, Delaunay(pts).simplices)


def disk_mesh(rings: int, radius: float = math.pi, sectors: int = 10) -> Mesh:
    """Structured triangulation of a disk: ``sectors * rings**2`` elements.

    Ring k carries ``sectors * k`` vertices on the circle of radius
    ``k * radius / rings``; between consecutive rings each sector is filled
    with a zigzag strip.  All boundary vertices lie exactly on the outer
    circle.
    """
    if rings < 1:
        raise ParameterError("rings must be >= 1")
    verts = [(0.0, 0.0)]
    ring_start = [None]  # 1-based ring index -> first vertex id
    for k in range(1, rings + 1):
        ring_start.append(len(verts))
        nk = sectors * k
        r = radius * k / rings
        for i in range(nk):
            a = 2.0 * math.pi * i / nk
            verts.append((r * math.cos(a), r * math.sin(a)))

    def ring_vertex(k, i):
        if k == 0:
            return 0
        return ring_start[k] + (i % (sectors * k))

    tris = []
    for k in range(1, rings + 1):
        for s in range(sectors):
            # inner ring offers k-1 intervals per sector, outer ring k
            inner = [ring_vertex(k - 1, s * (k - 1) + i) for i in range(k)]
            outer = [ring_vertex(k, s * k + i) for i in range(k + 1)]
            # zigzag: alternate outer-based and inner-based triangles
            io, ii = 0, 0
            while io < k or ii < k - 1:
                if io < k:
                    tris.append([outer[io], outer[io + 1], inner[ii]])
                    io += 1
                if ii < k - 1:
                    tris.append([outer[io], inner[ii + 1], inner[ii]])
                    ii += 1
    return Mesh(np.asarray(verts), np.asarray(tris, dtype=np.int64))


# ---------------------------------------------------------------------------
# Auxiliary lookup grid
# ---------------------------------------------------------------------------

class AuxGrid:
    """Uniform bin grid over the mesh bounding box for overlap candidates.

    Every element is registered in each bin its bounding box touches, so a
    query by box returns a superset of the elements whose boxes meet it.
    """

    def __init__(self, mesh: Mesh, target_bin_size: float = None):
        if target_bin_size is not None and target_bin_size <= 0.0:
            raise ParameterError("bin size must be positive")
        if mesh.num_elements == 0:
            raise ParameterError("mesh is empty")
        if target_bin_size is None:
            target_bin_size = 2.0 * float(mesh.diameters.mean())
        x0, y0, x1, y1 = mesh.bbox()
        self.origin = (x0, y0)
        self.nx = max(1, int(math.ceil((x1 - x0) / target_bin_size)))
        self.ny = max(1, int(math.ceil((y1 - y0) / target_bin_size)))
        self.cell_dx = (x1 - x0) / self.nx if x1 > x0 else 1.0
        self.cell_dy = (y1 - y0) / self.ny if y1 > y0 else 1.0

        p = mesh.vertices[mesh.triangles]
        lo = p.min(axis=1)
        hi = p.max(axis=1)
        self.elem_bbox = np.concatenate([lo, hi], axis=1)  # (ne, 4)
        ix0 = self._ix(lo[:, 0])
        iy0 = self._iy(lo[:, 1])
        ix1 = self._ix(hi[:, 0])
        iy1 = self._iy(hi[:, 1])
        buckets = [[] for _ in range(self.nx * self.ny)]
        for j in range(mesh.num_elements):
            for bx in range(ix0[j], ix1[j] + 1):
                for by in range(iy0[j], iy1[j] + 1):
                    buckets[by * self.nx + bx].append(j)
        self.bins = [np.asarray(b, dtype=np.int64) for b in buckets]

    def _ix(self, x):
        i = np.floor((np.asarray(x) - self.origin[0]) / self.cell_dx).astype(int)
        return np.clip(i, 0, self.nx - 1)

    def _iy(self, y):
        i = np.floor((np.asarray(y) - self.origin[1]) / self.cell_dy).astype(int)
        return np.clip(i, 0, self.ny - 1)

    def candidates_for_box(self, bbox) -> np.ndarray:
        """Element ids whose bounding boxes may intersect ``bbox`` (superset)."""
        x0, y0, x1, y1 = bbox
        gx1 = self.origin[0] + self.nx * self.cell_dx
        gy1 = self.origin[1] + self.ny * self.cell_dy
        if x1 < self.origin[0] or y1 < self.origin[1] or x0 > gx1 or y0 > gy1:
            return np.empty(0, dtype=np.int64)
        ix0 = int(self._ix(x0))
        ix1 = int(self._ix(x1))
        iy0 = int(self._iy(y0))
        iy1 = int(self._iy(y1))
        parts = [self.bins[by * self.nx + bx]
                 for by in range(iy0, iy1 + 1) for bx in range(ix0, ix1 + 1)]
        if not parts:
            return np.empty(0, dtype=np.int64)
        cand = np.unique(np.concatenate(parts))
        if cand.size == 0:
            return cand
        bb = self.elem_bbox[cand]
        keep = ((bb[:, 2] >= x0) & (bb[:, 0] <= x1)
                & (bb[:, 3] >= y0) & (bb[:, 1] <= y1))
        return cand[keep]


def build_aux_grid(mesh: Mesh, target_bin_size: float = None) -> AuxGrid:
    return AuxGrid(mesh, target_bin_size)


def candidates_for_box(grid: AuxGrid, bbox) -> np.ndarray:
    return grid.candidates_for_box(bbox)
