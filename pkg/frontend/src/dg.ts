/** Evaluation of dumped DG fields.
 *
 * A dump stores coefficients in each element's orthonormal basis.  The basis
 * is fully determined by the element geometry: Gram-Schmidt (Cholesky) of
 * centroid-centered, diameter-scaled monomials under the element L2 inner
 * product.  We rebuild it here with a quadrature exact for the polynomial
 * Gram integrands, so values agree with the solver to round-off.
 */

import { FieldDump, Mesh } from "./formats";

// 4-point Gauss-Legendre on [0,1]
const GAUSS_X = [
  (1 - 0.8611363115940526) / 2,
  (1 - 0.3399810435848563) / 2,
  (1 + 0.3399810435848563) / 2,
  (1 + 0.8611363115940526) / 2,
];
const GAUSS_W = [
  0.3478548451374538 / 2,
  0.6521451548625461 / 2,
  0.6521451548625461 / 2,
  0.3478548451374538 / 2,
];

function monomials(x: number, y: number, nk: number): number[] {
  const m = [1, x, y, x * x, x * y, y * y];
  return m.slice(0, nk);
}

function cholesky(a: number[][]): number[][] {
  const n = a.length;
  const c = Array.from({ length: n }, () => new Array<number>(n).fill(0));
  for (let i = 0; i < n; i++) {
    for (let j = 0; j <= i; j++) {
      let s = a[i][j];
      for (let k = 0; k < j; k++) s -= c[i][k] * c[j][k];
      if (i === j) {
        if (s <= 0) throw new Error("basis Gram matrix is not positive definite");
        c[i][i] = Math.sqrt(s);
      } else {
        c[i][j] = s / c[j][j];
      }
    }
  }
  return c;
}

function lowerInverse(c: number[][]): number[][] {
  const n = c.length;
  const inv = Array.from({ length: n }, () => new Array<number>(n).fill(0));
  for (let col = 0; col < n; col++) {
    inv[col][col] = 1 / c[col][col];
    for (let i = col + 1; i < n; i++) {
      let s = 0;
      for (let k = col; k < i; k++) s -= c[i][k] * inv[k][col];
      inv[i][col] = s / c[i][i];
    }
  }
  return inv;
}

export interface ElementBasis {
  centroid: [number, number];
  scale: number;
  /** transform[i][r]: basis function i over scaled centered monomials */
  transform: number[][];
}

export function elementBasis(mesh: Mesh, j: number, degree: number): ElementBasis {
  const [ia, ib, ic] = mesh.triangles[j];
  const A = mesh.vertices[ia];
  const B = mesh.vertices[ib];
  const C = mesh.vertices[ic];
  const centroid: [number, number] = [
    (A[0] + B[0] + C[0]) / 3,
    (A[1] + B[1] + C[1]) / 3,
  ];
  const edge = (p: number[], q: number[]) => Math.hypot(q[0] - p[0], q[1] - p[1]);
  const scale = Math.max(edge(A, B), edge(B, C), edge(C, A));
  const area2 =
    (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0]);
  const nk = ((degree + 1) * (degree + 2)) / 2;

  const gram = Array.from({ length: nk }, () => new Array<number>(nk).fill(0));
  for (let iu = 0; iu < 4; iu++) {
    for (let iv = 0; iv < 4; iv++) {
      const u = GAUSS_X[iu];
      const v = GAUSS_X[iv] * (1 - u);
      const w = GAUSS_W[iu] * GAUSS_W[iv] * (1 - u) * Math.abs(area2);
      const x = A[0] + u * (B[0] - A[0]) + v * (C[0] - A[0]);
      const y = A[1] + u * (B[1] - A[1]) + v * (C[1] - A[1]);
      const m = monomials((x - centroid[0]) / scale, (y - centroid[1]) / scale, nk);
      for (let r = 0; r < nk; r++) {
        for (let s = 0; s < nk; s++) gram[r][s] += w * m[r] * m[s];
      }
    }
  }
  return { centroid, scale, transform: lowerInverse(cholesky(gram)) };
}

export class FieldEvaluator {
  private bases: Array<ElementBasis | undefined>;

  constructor(
    private mesh: Mesh,
    private dump: FieldDump,
  ) {
    if (mesh.triangles.length !== dump.numElements) {
      throw new Error(
        `mesh has ${mesh.triangles.length} elements, dump has ${dump.numElements}`,
      );
    }
    this.bases = new Array(dump.numElements);
  }

  evaluate(j: number, x: number, y: number): number {
    let basis = this.bases[j];
    if (!basis) {
      basis = elementBasis(this.mesh, j, this.dump.degree);
      this.bases[j] = basis;
    }
    const nk = this.dump.coefficients[j].length;
    const m = monomials(
      (x - basis.centroid[0]) / basis.scale,
      (y - basis.centroid[1]) / basis.scale,
      nk,
    );
    let value = 0;
    for (let i = 0; i < nk; i++) {
      let phi = 0;
      for (let r = 0; r <= i; r++) phi += basis.transform[i][r] * m[r];
      value += this.dump.coefficients[j][i] * phi;
    }
    return value;
  }
}
