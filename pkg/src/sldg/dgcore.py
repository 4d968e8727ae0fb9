"""Discontinuous piecewise-polynomial fields on a triangulation.

Each element carries an orthonormal polynomial basis obtained by a
Gram-Schmidt (Cholesky) transform of centroid-centered, diameter-scaled
monomials.  With an orthonormal basis the projection and the transport
update never solve a mass-matrix system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, ContainmentError
from .geometry import point_in_triangle
from .mesh import Mesh
from .quadrature import map_to_triangle, triangle_rule

# Degree-lexicographic monomial exponents up to degree 2.
MONO_EXP = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


class ConditioningWarning(UserWarning):
    pass


def n_coeffs(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def monomial_values(xs, ys, nk: int) -> np.ndarray:
    """Stack of monomials in pre-scaled coordinates; shape xs.shape + (nk,)."""
    cols = [np.ones_like(xs), xs, ys, xs * xs, xs * ys, ys * ys]
    return np.stack(cols[:nk], axis=-1)


@dataclass
class BasisSet:
    """Orthonormal basis of one element.

    ``transform`` is lower triangular: function i is
    sum_r transform[i, r] * m_r((x - x0)/scale, (y - y0)/scale).
    """

    degree: int
    centroid: np.ndarray
    scale: float
    transform: np.ndarray

    @property
    def n_funcs(self) -> int:
        return n_coeffs(self.degree)

    def eval_functions(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        xs = (pts[..., 0] - self.centroid[0]) / self.scale
        ys = (pts[..., 1] - self.centroid[1]) / self.scale
        return monomial_values(xs, ys, self.n_funcs) @ self.transform.T


class MeshBasis:
    """Orthonormal bases of every element, built in one vectorized pass."""

    def __init__(self, mesh: Mesh, degree: int, quad_degree: int = None):
        if degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        self.mesh = mesh
        self.degree = degree
        self.nk = n_coeffs(degree)
        if quad_degree is None:
            quad_degree = 2 * degree + 2
        self.quad_degree = max(quad_degree, 2 * degree)
        ref_pts, ref_w = triangle_rule(self.quad_degree)
        ne = mesh.num_elements
        tri = mesh.vertices[mesh.triangles]          # (ne, 3, 2)
        a = tri[:, 0][:, None, :]
        e1 = (tri[:, 1] - tri[:, 0])[:, None, :]
        e2 = (tri[:, 2] - tri[:, 0])[:, None, :]
        phys = a + ref_pts[None, :, 0:1] * e1 + ref_pts[None, :, 1:2] * e2
        jac = 2.0 * mesh.areas                        # reference area is 1/2
        self.quad_points = phys                       # (ne, nq, 2)
        self.quad_weights = ref_w[None, :] * jac[:, None]

        self.scale = mesh.diameters.copy()
        xs = (phys[..., 0] - mesh.centroids[:, None, 0]) / self.scale[:, None]
        ys = (phys[..., 1] - mesh.centroids[:, None, 1]) / self.scale[:, None]
        M = monomial_values(xs, ys, self.nk)          # (ne, nq, nk)
        G = np.einsum("eqr,eqs,eq->ers", M, M, self.quad_weights)
        ratio = mesh.diameters / mesh.inradius
        if np.any(ratio > 1e6):
            warnings.warn("near-degenerate elements; basis may be ill-conditioned",
                          ConditioningWarning)
        try:
            C = np.linalg.cholesky(G)
        except np.linalg.LinAlgError as exc:
            raise ConditioningError(f"basis Gram factorization failed: {exc}") from exc
        eye = np.broadcast_to(np.eye(self.nk), (ne, self.nk, self.nk))
        self.transform = np.linalg.solve(C, eye)      # (ne, nk, nk) lower
        self.phi_quad = np.einsum("eir,eqr->eqi", self.transform, M)

    def basis_for(self, j: int) -> BasisSet:
        return BasisSet(self.degree, self.mesh.centroids[j], float(self.scale[j]),
                        self.transform[j])

    def eval_at(self, elem_ids, pts) -> np.ndarray:
        """Basis functions at ``pts`` (n, 2) owned by ``elem_ids`` (n,)."""
        elem_ids = np.asarray(elem_ids)
        pts = np.asarray(pts, dtype=float)
        xs = (pts[..., 0] - self.mesh.centroids[elem_ids, 0]) / self.scale[elem_ids]
        ys = (pts[..., 1] - self.mesh.centroids[elem_ids, 1]) / self.scale[elem_ids]
        M = monomial_values(xs, ys, self.nk)
        return np.einsum("...ir,...r->...i", self.transform[elem_ids], M)


def build_basis(tri, k: int) -> BasisSet:
    """Orthonormal basis for a standalone triangle (3 CCW corner points)."""
    sub = Mesh(np.asarray(tri, dtype=float), np.array([[0, 1, 2]]))
    return MeshBasis(sub, k).basis_for(0)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclass
class NormReport:
    l1: float
    l2: float
    linf: float
    per_element_l1: np.ndarray
    per_element_l2sq: np.ndarray


class DGField:
    """Per-element coefficient vectors in the element-local orthonormal basis."""

    def __init__(self, basis: MeshBasis, coeffs: np.ndarray = None):
        self.basis = basis
        self.mesh = basis.mesh
        self.degree = basis.degree
        if coeffs is None:
            coeffs = np.zeros((self.mesh.num_elements, basis.nk))
        self.coeffs = coeffs

    def copy(self) -> "DGField":
        return DGField(self.basis, self.coeffs.copy())

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, elem_id: int, point) -> float:
        tri = self.mesh.element_points(elem_id)
        if not point_in_triangle(point, tri, tol=1e-7):
            raise ContainmentError(f"point {point} outside element {elem_id}")
        phi = self.basis.basis_for(elem_id).eval_functions(np.asarray(point))
        return float(phi @ self.coeffs[elem_id])

    def eval_many(self, elem_ids, pts) -> np.ndarray:
        phi = self.basis.eval_at(elem_ids, pts)
        return np.einsum("...i,...i->...", phi, self.coeffs[np.asarray(elem_ids)])

    def cell_averages(self) -> np.ndarray:
        # constant mode value is 1/sqrt(area)
        return self.coeffs[:, 0] / np.sqrt(self.mesh.areas)

    def total_mass(self) -> float:
        return float(self.coeffs[:, 0] @ np.sqrt(self.mesh.areas))

    def monomial_coeffs(self) -> np.ndarray:
        """Coefficients in the scaled centroid-centered monomials, (ne, nk)."""
        return np.einsum("ei,eir->er", self.coeffs, self.basis.transform)


def project_function(basis: MeshBasis, f) -> DGField:
    """L2 projection of f(x, y) onto the broken polynomial space."""
    vals = f(basis.quad_points[..., 0], basis.quad_points[..., 1])
    coeffs = np.einsum("eq,eqi,eq->ei", np.asarray(vals, dtype=float),
                       basis.phi_quad, basis.quad_weights)
    return DGField(basis, coeffs)


def project(f, tri, basis: BasisSet) -> np.ndarray:
    """Projection coefficients of f on a single element (spec-level op)."""
    ref_pts, ref_w = triangle_rule(max(6, 2 * basis.degree + 2))
    phys, w = map_to_triangle(tri, ref_pts, ref_w)
    phi = basis.eval_functions(phys)
    vals = np.asarray(f(phys[:, 0], phys[:, 1]), dtype=float)
    return (phi * (vals * w)[:, None]).sum(axis=0)


def error_norms(field: DGField, exact, quad_degree: int = 10) -> NormReport:
    """Broken L1/L2/Linf distances between the field and ``exact``.

    Linf is the max over the quadrature nodes.
    """
    ref_pts, ref_w = triangle_rule(quad_degree)
    mesh = field.mesh
    tri = mesh.vertices[mesh.triangles]
    a = tri[:, 0][:, None, :]
    e1 = (tri[:, 1] - tri[:, 0])[:, None, :]
    e2 = (tri[:, 2] - tri[:, 0])[:, None, :]
    phys = a + ref_pts[None, :, 0:1] * e1 + ref_pts[None, :, 1:2] * e2
    w = ref_w[None, :] * (2.0 * mesh.areas)[:, None]

    xs = (phys[..., 0] - mesh.centroids[:, None, 0]) / field.basis.scale[:, None]
    ys = (phys[..., 1] - mesh.centroids[:, None, 1]) / field.basis.scale[:, None]
    M = monomial_values(xs, ys, field.basis.nk)
    phi = np.einsum("eir,eqr->eqi", field.basis.transform, M)
    uh = np.einsum("eqi,ei->eq", phi, field.coeffs)
    diff = uh - np.asarray(exact(phys[..., 0], phys[..., 1]), dtype=float)

    per_l1 = (np.abs(diff) * w).sum(axis=1)
    per_l2 = (diff * diff * w).sum(axis=1)
    return NormReport(float(per_l1.sum()), math.sqrt(float(per_l2.sum())),
                      float(np.abs(diff).max()), per_l1, per_l2)


def field_difference_norms(a: DGField, b: DGField, quad_degree: int = 10) -> NormReport:
    """Norms of a - b for two fields on the same mesh and basis."""
    diff = DGField(a.basis, a.coeffs - b.coeffs)
    return error_norms(diff, lambda x, y: np.zeros_like(x), quad_degree)


def total_mass(field: DGField) -> float:
    return field.total_mass()


# ---------------------------------------------------------------------------
# Field dump format: header "degree <k> <ne>", then "elem_id m coeff" lines
# ---------------------------------------------------------------------------

def save_field(field: DGField, path):
    with open(path, "w") as fh:
        fh.write(f"degree {field.degree} {field.mesh.num_elements}\n")
        for j in range(field.mesh.num_elements):
            for m in range(field.basis.nk):
                fh.write(f"{j} {m} {float(field.coeffs[j, m])!r}\n")


def load_field(path, basis: MeshBasis) -> DGField:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "degree":
            raise ValueError(f"{path}: bad field dump header")
        k, ne = int(header[1]), int(header[2])
        if k != basis.degree or ne != basis.mesh.num_elements:
            raise ValueError(f"{path}: dump does not match basis "
                             f"(degree {k} vs {basis.degree}, ne {ne})")
        coeffs = np.zeros((ne, basis.nk))
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            j, m, v = int(parts[0]), int(parts[1]), float(parts[2])
            coeffs[j, m] = v
    return DGField(basis, coeffs)
