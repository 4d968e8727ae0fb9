/** Minimal SVG assembly helpers (string based, dependency free). */

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  return Math.abs(v) < 1e-12 ? "0" : v.toPrecision(6).replace(/\.?0+$/, "");
}

export function tag(
  name: string,
  attrs: Record<string, string | number>,
  body = "",
): string {
  const a = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : v}"`)
    .join(" ");
  return body ? `<${name} ${a}>${body}</${name}>` : `<${name} ${a}/>`;
}

export function polygon(
  pts: Array<[number, number]>,
  fill: string,
  stroke = "none",
  strokeWidth = 0,
): string {
  const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  const attrs: Record<string, string | number> = { points: p, fill };
  if (stroke !== "none") {
    attrs.stroke = stroke;
    attrs["stroke-width"] = strokeWidth;
  }
  return tag("polygon", attrs);
}

export function polyline(
  pts: Array<[number, number]>,
  stroke: string,
  width = 1.5,
  dash = "",
): string {
  const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  const attrs: Record<string, string | number> = {
    points: p,
    fill: "none",
    stroke,
    "stroke-width": width,
  };
  if (dash) attrs["stroke-dasharray"] = dash;
  return tag("polyline", attrs);
}

export function text(
  x: number,
  y: number,
  content: string,
  size = 12,
  anchor = "start",
  extra: Record<string, string | number> = {},
): string {
  return tag(
    "text",
    { x, y, "font-size": size, "font-family": "sans-serif",
      "text-anchor": anchor, ...extra },
    escapeXml(content),
  );
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function document(width: number, height: number, body: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body.join("\n") +
    "\n</svg>\n"
  );
}

/** Linear world-to-screen mapping with a margin box. */
export interface Frame {
  x: (wx: number) => number;
  y: (wy: number) => number;
  box: { x0: number; y0: number; x1: number; y1: number };
}

export function makeFrame(
  wx0: number,
  wx1: number,
  wy0: number,
  wy1: number,
  width: number,
  height: number,
  margin: { l: number; r: number; t: number; b: number },
): Frame {
  const box = {
    x0: margin.l,
    y0: margin.t,
    x1: width - margin.r,
    y1: height - margin.b,
  };
  const sx = (box.x1 - box.x0) / (wx1 - wx0);
  const sy = (box.y1 - box.y0) / (wy1 - wy0);
  return {
    x: (wx) => box.x0 + (wx - wx0) * sx,
    y: (wy) => box.y1 - (wy - wy0) * sy,
    box,
  };
}
