/** Error-versus-CFL chart: one line per sweep table (per mesh). */

import * as path from "path";

import { CsvTable, column } from "./formats";
import * as svg from "./svg";
import { logAxes } from "./convergence";

const LINE_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

export function cflSvg(
  tables: Array<{ name: string; table: CsvTable }>,
  options: { width?: number; height?: number; norm?: string; title?: string } = {},
): string {
  const width = options.width ?? 560;
  const height = options.height ?? 480;
  const norm = options.norm ?? "L1";

  const series = tables.map(({ name, table }) => ({
    name,
    cfl: column(table, "cfl"),
    err: column(table, norm),
  }));
  const allC = series.flatMap((s) => s.cfl);
  const allE = series.flatMap((s) => s.err);
  const lx0 = Math.log10(Math.min(...allC)) - 0.1;
  const lx1 = Math.log10(Math.max(...allC)) + 0.1;
  let ly0 = Math.log10(Math.min(...allE));
  let ly1 = Math.log10(Math.max(...allE));
  if (!(ly1 > ly0)) {
    ly0 -= 1;
    ly1 += 1;
  }
  ly0 -= 0.3;
  ly1 += 0.3;
  const frame = svg.makeFrame(lx0, lx1, ly0, ly1, width, height,
                              { l: 70, r: 25, t: 40, b: 55 });
  const body: string[] = [];
  body.push(...logAxes(frame, lx0, lx1, ly0, ly1, "CFL", `${norm} error`));
  series.forEach((s, i) => {
    const color = LINE_COLORS[i % LINE_COLORS.length];
    const pts = s.cfl.map(
      (c, k) =>
        [frame.x(Math.log10(c)), frame.y(Math.log10(s.err[k]))] as [number, number],
    );
    body.push(svg.polyline(pts, color, 1.8));
    for (const [px, py] of pts) {
      body.push(svg.tag("circle", { cx: px, cy: py, r: 3.2, fill: color }));
    }
    body.push(svg.text(frame.box.x0 + 12, frame.box.y0 + 18 + 16 * i,
                       s.name, 12, "start", { fill: color }));
  });
  if (options.title) {
    body.push(svg.text(width / 2, 22, options.title, 15, "middle"));
  }
  return svg.document(width, height, body);
}

export function seriesName(p: string): string {
  return path.basename(p).replace(/\.[^.]+$/, "");
}
