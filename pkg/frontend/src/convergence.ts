/** Log-log convergence plot with least-squares slope annotations. */

import { CsvTable, column } from "./formats";
import * as svg from "./svg";

export interface SlopeInfo {
  norm: string;
  fitted: number;
  /** mean of the CSV's own order column (NaN entries skipped) */
  csvOrder: number;
}

export function fitSlope(xs: number[], ys: number[]): number {
  const lx = xs.map(Math.log);
  const ly = ys.map(Math.log);
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) ** 2;
  }
  return num / den;
}

export function convergenceSlopes(table: CsvTable): SlopeInfo[] {
  const r = column(table, "r_max");
  if (r.length < 2) throw new Error("convergence table needs at least 2 rows");
  const norms: Array<[string, string]> = [
    ["L1", "L1_order"],
    ["L2", "L2_order"],
    ["Linf", "Linf_order"],
  ];
  return norms.map(([name, orderCol]) => {
    const e = column(table, name);
    const orders = column(table, orderCol).filter((v) => Number.isFinite(v));
    const csvOrder = orders.length
      ? orders.reduce((a, b) => a + b, 0) / orders.length
      : NaN;
    return { norm: name, fitted: fitSlope(r, e), csvOrder };
  });
}

const SERIES_COLORS: Record<string, string> = {
  L1: "#1f77b4",
  L2: "#d62728",
  Linf: "#2ca02c",
};

export function convergenceSvg(
  table: CsvTable,
  options: { width?: number; height?: number; title?: string } = {},
): { svg: string; slopes: SlopeInfo[] } {
  const width = options.width ?? 560;
  const height = options.height ?? 480;
  const r = column(table, "r_max");
  const slopes = convergenceSlopes(table);

  const series = ["L1", "L2", "Linf"].map((name) => ({
    name,
    values: column(table, name),
  }));
  const allVals = series.flatMap((s) => s.values);
  const lx0 = Math.log10(Math.min(...r)) - 0.12;
  const lx1 = Math.log10(Math.max(...r)) + 0.12;
  const ly0 = Math.log10(Math.min(...allVals)) - 0.3;
  const ly1 = Math.log10(Math.max(...allVals)) + 0.3;
  const frame = svg.makeFrame(lx0, lx1, ly0, ly1, width, height,
                              { l: 70, r: 25, t: 40, b: 55 });

  const body: string[] = [];
  body.push(...logAxes(frame, lx0, lx1, ly0, ly1, "r_max", "error"));

  slopes.forEach((s, i) => {
    const vals = series[i].values;
    const pts = r.map(
      (ri, k) =>
        [frame.x(Math.log10(ri)), frame.y(Math.log10(vals[k]))] as [number, number],
    );
    const color = SERIES_COLORS[s.norm];
    body.push(svg.polyline(pts, color, 1.8));
    for (const [px, py] of pts) {
      body.push(svg.tag("circle", { cx: px, cy: py, r: 3.4, fill: color }));
    }
    body.push(
      svg.text(frame.box.x0 + 12, frame.box.y0 + 18 + 16 * i,
               `${s.norm} slope = ${s.fitted.toFixed(2)}`, 12, "start",
               { fill: color }),
    );
  });
  if (options.title) {
    body.push(svg.text(width / 2, 22, options.title, 15, "middle"));
  }
  return { svg: svg.document(width, height, body), slopes };
}

export function logAxes(
  frame: svg.Frame,
  lx0: number,
  lx1: number,
  ly0: number,
  ly1: number,
  xlabel: string,
  ylabel: string,
): string[] {
  const body: string[] = [];
  body.push(
    svg.tag("rect", {
      x: frame.box.x0,
      y: frame.box.y0,
      width: frame.box.x1 - frame.box.x0,
      height: frame.box.y1 - frame.box.y0,
      fill: "none",
      stroke: "#444",
      "stroke-width": 1,
    }),
  );
  for (let d = Math.ceil(ly0); d <= Math.floor(ly1); d++) {
    const y = frame.y(d);
    body.push(svg.polyline([[frame.box.x0, y], [frame.box.x1, y]], "#ddd", 0.8));
    body.push(svg.text(frame.box.x0 - 6, y + 4, `1e${d}`, 11, "end"));
  }
  const xt: number[] = [];
  for (let d = Math.ceil(lx0 * 10) / 10; d <= lx1 + 1e-9; d += (lx1 - lx0) / 4) {
    xt.push(d);
  }
  for (const d of xt) {
    const x = frame.x(d);
    body.push(svg.text(x, frame.box.y1 + 18, `${Math.pow(10, d).toPrecision(2)}`,
                       11, "middle"));
  }
  body.push(svg.text((frame.box.x0 + frame.box.x1) / 2, frame.box.y1 + 38,
                     xlabel, 12, "middle"));
  body.push(svg.text(16, (frame.box.y0 + frame.box.y1) / 2, ylabel, 12, "middle",
                     { transform: `rotate(-90 16 ${(frame.box.y0 + frame.box.y1) / 2})` }));
  return body;
}
