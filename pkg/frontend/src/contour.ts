/** Filled contour rendering of a DG field dump on its mesh. */

import { FieldEvaluator } from "./dg";
import { FieldDump, Mesh } from "./formats";
import { bandColor, viridis } from "./colormap";
import * as svg from "./svg";

export interface ContourOptions {
  width?: number;
  height?: number;
  /** sub-triangulation density per element edge */
  density?: number;
  bands?: number;
  title?: string;
}

interface SubTri {
  pts: Array<[number, number]>;
  value: number;
}

/** Split a triangle into density^2 sub-triangles and sample the field at
 * their centroids. */
export function sampleElement(
  evalr: FieldEvaluator,
  mesh: Mesh,
  j: number,
  density: number,
): SubTri[] {
  const [ia, ib, ic] = mesh.triangles[j];
  const A = mesh.vertices[ia];
  const B = mesh.vertices[ib];
  const C = mesh.vertices[ic];
  const at = (u: number, v: number): [number, number] => [
    A[0] + u * (B[0] - A[0]) + v * (C[0] - A[0]),
    A[1] + u * (B[1] - A[1]) + v * (C[1] - A[1]),
  ];
  const out: SubTri[] = [];
  const n = density;
  for (let row = 0; row < n; row++) {
    for (let col = 0; col < n - row; col++) {
      const u0 = col / n;
      const v0 = row / n;
      const h = 1 / n;
      const up: Array<[number, number]> = [
        at(u0, v0),
        at(u0 + h, v0),
        at(u0, v0 + h),
      ];
      out.push({ pts: up, value: centroidValue(evalr, j, up) });
      if (col < n - row - 1) {
        const down: Array<[number, number]> = [
          at(u0 + h, v0),
          at(u0 + h, v0 + h),
          at(u0, v0 + h),
        ];
        out.push({ pts: down, value: centroidValue(evalr, j, down) });
      }
    }
  }
  return out;
}

function centroidValue(
  evalr: FieldEvaluator,
  j: number,
  pts: Array<[number, number]>,
): number {
  const cx = (pts[0][0] + pts[1][0] + pts[2][0]) / 3;
  const cy = (pts[0][1] + pts[1][1] + pts[2][1]) / 3;
  return evalr.evaluate(j, cx, cy);
}

export function contourSvg(
  mesh: Mesh,
  dump: FieldDump,
  options: ContourOptions = {},
): string {
  const width = options.width ?? 640;
  const height = options.height ?? 560;
  const density = options.density ?? 4;
  const bands = options.bands ?? 12;
  const evalr = new FieldEvaluator(mesh, dump);

  const tris: SubTri[] = [];
  for (let j = 0; j < mesh.triangles.length; j++) {
    tris.push(...sampleElement(evalr, mesh, j, density));
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const t of tris) {
    lo = Math.min(lo, t.value);
    hi = Math.max(hi, t.value);
  }
  if (!(hi - lo > 1e-12 * Math.max(Math.abs(lo), Math.abs(hi), 1))) {
    hi = lo + 1;   // flat field: everything lands in the bottom band
  }

  let wx0 = Infinity, wx1 = -Infinity, wy0 = Infinity, wy1 = -Infinity;
  for (const [x, y] of mesh.vertices) {
    wx0 = Math.min(wx0, x);
    wx1 = Math.max(wx1, x);
    wy0 = Math.min(wy0, y);
    wy1 = Math.max(wy1, y);
  }
  const frame = svg.makeFrame(wx0, wx1, wy0, wy1, width, height,
                              { l: 50, r: 110, t: 40, b: 40 });

  const body: string[] = [];
  for (const t of tris) {
    const fill = bandColor(t.value, lo, hi, bands);
    const pts = t.pts.map(
      ([x, y]) => [frame.x(x), frame.y(y)] as [number, number],
    );
    // paint with a matching hairline stroke so adjacent fills do not leave seams
    body.push(svg.polygon(pts, fill, fill, 0.4));
  }

  // colorbar
  const cbX = width - 90;
  const cbH = frame.box.y1 - frame.box.y0;
  for (let b = 0; b < bands; b++) {
    const y1 = frame.box.y1 - ((b + 1) / bands) * cbH;
    body.push(
      svg.tag("rect", {
        x: cbX,
        y: y1,
        width: 18,
        height: cbH / bands + 0.5,
        fill: viridis((b + 0.5) / bands),
      }),
    );
  }
  body.push(svg.text(cbX + 24, frame.box.y1 + 4, lo.toPrecision(3), 11));
  body.push(svg.text(cbX + 24, frame.box.y0 + 6, hi.toPrecision(3), 11));
  body.push(
    svg.tag("rect", {
      x: frame.box.x0,
      y: frame.box.y0,
      width: frame.box.x1 - frame.box.x0,
      height: cbH,
      fill: "none",
      stroke: "#444",
      "stroke-width": 1,
    }),
  );
  if (options.title) {
    body.push(svg.text(width / 2, 24, options.title, 15, "middle"));
  }
  return svg.document(width, height, body);
}
