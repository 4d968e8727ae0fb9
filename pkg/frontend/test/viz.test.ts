import * as fs from "fs";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { cflSvg } from "../src/cfl";
import { contourSvg, sampleElement } from "../src/contour";
import { convergenceSlopes, convergenceSvg, fitSlope } from "../src/convergence";
import { FieldEvaluator, elementBasis } from "../src/dg";
import { loadCsv, loadFieldDump, loadMesh, parseCsv } from "../src/formats";
import { main } from "../src/cli";

const FIX = path.join(__dirname, "fixtures");

const mesh = loadMesh(path.join(FIX, "disk160.txt"));
const dump = loadFieldDump(path.join(FIX, "slotted_disk_p2.txt"));

describe("formats", () => {
  it("parses the mesh fixture", () => {
    expect(mesh.vertices.length).toBe(101);
    expect(mesh.triangles.length).toBe(160);
  });

  it("parses the field dump fixture", () => {
    expect(dump.degree).toBe(2);
    expect(dump.numElements).toBe(160);
    expect(dump.coefficients[0].length).toBe(6);
  });

  it("rejects malformed CSV", () => {
    expect(() => parseCsv("a,b\n1\n")).toThrow();
    expect(() => parseCsv("a,b\n")).toThrow();
  });
});

describe("field evaluation", () => {
  it("matches the solver's reference values", () => {
    const ref = JSON.parse(
      fs.readFileSync(path.join(FIX, "eval_reference.json"), "utf8"),
    );
    const ev = new FieldEvaluator(mesh, dump);
    for (let i = 0; i < ref.elements.length; i++) {
      const [x, y] = ref.points[i];
      const got = ev.evaluate(ref.elements[i], x, y);
      expect(Math.abs(got - ref.values[i])).toBeLessThan(1e-8);
    }
  });

  it("sub-triangulates an element into density^2 cells", () => {
    const ev = new FieldEvaluator(mesh, dump);
    const tris = sampleElement(ev, mesh, 0, 4);
    expect(tris.length).toBe(16);
  });
});

describe("contour", () => {
  it("renders the slotted disk with visible structure", () => {
    const svg = contourSvg(mesh, dump, { title: "slotted disk" });
    expect(svg.startsWith("<svg")).toBe(true);
    const fills = new Set(
      [...svg.matchAll(/fill="(rgb\([^)]*\))"/g)].map((m) => m[1]),
    );
    // the disk silhouette needs at least the in/out bands plus transitions
    expect(fills.size).toBeGreaterThan(3);
    expect((svg.match(/<polygon /g) ?? []).length).toBe(160 * 16);
  });

  it("renders a constant field in a single band color", () => {
    // a constant function u = 1 has c0 = 1/phi0 = sqrt(area) per element
    const flat = {
      degree: dump.degree,
      numElements: dump.numElements,
      coefficients: dump.coefficients.map((c, j) => {
        const basis = elementBasis(mesh, j, dump.degree);
        return c.map((v, i) => (i === 0 ? 1 / basis.transform[0][0] : 0));
      }),
    };
    const svg = contourSvg(mesh, flat);
    const fills = new Set(
      [...svg.matchAll(/<polygon points="[^"]*" fill="(rgb\([^)]*\))"/g)].map(
        (m) => m[1],
      ),
    );
    expect(fills.size).toBe(1);
  });

  it("is deterministic", () => {
    const a = contourSvg(mesh, dump);
    const b = contourSvg(mesh, dump);
    expect(a).toBe(b);
  });
});

describe("convergence", () => {
  it("recovers slope 3.00 +- 0.01 from synthetic r^3 data", () => {
    const table = loadCsv(path.join(FIX, "errors_r3.csv"));
    const slopes = convergenceSlopes(table);
    for (const s of slopes) {
      expect(Math.abs(s.fitted - 3.0)).toBeLessThan(0.01);
      expect(Math.abs(s.fitted - s.csvOrder)).toBeLessThan(0.05);
    }
  });

  it("annotates the fitted slopes in the figure", () => {
    const table = loadCsv(path.join(FIX, "errors_r3.csv"));
    const { svg, slopes } = convergenceSvg(table, { title: "orders" });
    expect(svg).toContain(`L1 slope = ${slopes[0].fitted.toFixed(2)}`);
    expect(svg).toContain("Linf slope");
  });

  it("rejects single-row tables", () => {
    const table = parseCsv(
      "M,r_max,L1,L1_order,L2,L2_order,Linf,Linf_order\n160,0.3,1e-3,nan,2e-3,nan,4e-3,nan\n",
    );
    expect(() => convergenceSlopes(table)).toThrow();
  });

  it("fits exact slopes on clean power laws", () => {
    const xs = [0.4, 0.2, 0.1];
    const ys = xs.map((x) => 5 * x ** 2.5);
    expect(Math.abs(fitSlope(xs, ys) - 2.5)).toBeLessThan(1e-12);
  });
});

describe("cfl sweep", () => {
  const tables = [0, 1, 2].map((i) => ({
    name: `cfl_mesh${i}`,
    table: loadCsv(path.join(FIX, `cfl_mesh${i}.csv`)),
  }));

  it("draws one line per mesh", () => {
    const svg = cflSvg(tables, { title: "errors vs CFL" });
    expect((svg.match(/<polyline /g) ?? []).length).toBeGreaterThanOrEqual(3);
    expect(svg).toContain("cfl_mesh0");
    expect(svg).toContain("cfl_mesh2");
  });

  it("handles a flat synthetic line", () => {
    const svg = cflSvg([tables[0]]);
    expect(svg.startsWith("<svg")).toBe(true);
  });

  it("errors on a missing column", () => {
    const bad = parseCsv("cfl,L2\n1,2\n2,3\n");
    expect(() => cflSvg([{ name: "bad", table: bad }])).toThrow(/L1/);
  });
});

describe("cli", () => {
  const tmp = fs.mkdtempSync(path.join(__dirname, "tmp-"));

  it("contour command writes an SVG", () => {
    const out = path.join(tmp, "contour.svg");
    const rc = main([
      "contour",
      "--in", path.join(FIX, "slotted_disk_p2.txt"),
      "--mesh", path.join(FIX, "disk160.txt"),
      "--out", out,
    ]);
    expect(rc).toBe(0);
    expect(fs.readFileSync(out, "utf8")).toContain("<svg");
  });

  it("convergence command writes an SVG", () => {
    const out = path.join(tmp, "conv.svg");
    const rc = main(["convergence", "--in", path.join(FIX, "errors_r3.csv"),
                     "--out", out]);
    expect(rc).toBe(0);
    expect(fs.existsSync(out)).toBe(true);
  });

  it("cfl command accepts multiple inputs", () => {
    const out = path.join(tmp, "cfl.svg");
    const rc = main([
      "cfl",
      "--in",
      [0, 1, 2].map((i) => path.join(FIX, `cfl_mesh${i}.csv`)).join(","),
      "--out", out,
    ]);
    expect(rc).toBe(0);
  });

  it("reports bad usage", () => {
    expect(main([])).toBe(2);
    expect(main(["contour", "--out", "x.svg"])).toBe(1);
  });
});
