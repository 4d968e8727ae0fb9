/** Parsers for the solver's text outputs: meshes, field dumps, CSV tables. */

import * as fs from "fs";

export interface Mesh {
  vertices: Array<[number, number]>;
  triangles: Array<[number, number, number]>;
}

export interface FieldDump {
  degree: number;
  numElements: number;
  /** coefficients[j][m] in the element-local orthonormal basis */
  coefficients: number[][];
}

export function parseMesh(text: string): Mesh {
  const tokens = text.split(/\s+/).filter((t) => t.length > 0);
  let k = 0;
  const next = () => {
    if (k >= tokens.length) throw new Error("mesh file truncated");
    return tokens[k++];
  };
  const nv = parseInt(next(), 10);
  const ne = parseInt(next(), 10);
  if (!Number.isFinite(nv) || !Number.isFinite(ne)) {
    throw new Error("bad mesh header");
  }
  const vertices: Array<[number, number]> = [];
  for (let i = 0; i < nv; i++) {
    vertices.push([parseFloat(next()), parseFloat(next())]);
  }
  const triangles: Array<[number, number, number]> = [];
  for (let j = 0; j < ne; j++) {
    triangles.push([
      parseInt(next(), 10),
      parseInt(next(), 10),
      parseInt(next(), 10),
    ]);
  }
  return { vertices, triangles };
}

export function loadMesh(path: string): Mesh {
  return parseMesh(fs.readFileSync(path, "utf8"));
}

export function parseFieldDump(text: string): FieldDump {
  const lines = text.split("\n");
  const header = lines[0].trim().split(/\s+/);
  if (header.length !== 3 || header[0] !== "degree") {
    throw new Error(`bad field dump header: ${lines[0]}`);
  }
  const degree = parseInt(header[1], 10);
  const numElements = parseInt(header[2], 10);
  const nk = ((degree + 1) * (degree + 2)) / 2;
  const coefficients = Array.from({ length: numElements }, () =>
    new Array<number>(nk).fill(0),
  );
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const parts = line.split(/\s+/);
    if (parts.length < 3) throw new Error(`bad field dump line ${i + 1}`);
    const j = parseInt(parts[0], 10);
    const m = parseInt(parts[1], 10);
    coefficients[j][m] = parseFloat(parts[2]);
  }
  return { degree, numElements, coefficients };
}

export function loadFieldDump(path: string): FieldDump {
  return parseFieldDump(fs.readFileSync(path, "utf8"));
}

export interface CsvTable {
  columns: string[];
  rows: number[][];
}

export function parseCsv(text: string): CsvTable {
  const lines = text
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length < 2) throw new Error("CSV needs a header and at least one row");
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows = lines.slice(1).map((line, i) => {
    const parts = line.split(",");
    if (parts.length !== columns.length) {
      throw new Error(`CSV row ${i + 2} has ${parts.length} fields, expected ${columns.length}`);
    }
    return parts.map((p) => parseFloat(p));
  });
  return { columns, rows };
}

export function loadCsv(path: string): CsvTable {
  return parseCsv(fs.readFileSync(path, "utf8"));
}

export function column(table: CsvTable, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new Error(`CSV is missing column '${name}'`);
  return table.rows.map((r) => r[idx]);
}
