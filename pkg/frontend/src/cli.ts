/** Command line:
 *
 *   sldg-viz contour     --in field.txt --mesh mesh.txt --out fig.svg
 *   sldg-viz convergence --in errors.csv --out fig.svg
 *   sldg-viz cfl         --in sweep0.csv,sweep1.csv --out fig.svg
 */

import * as fs from "fs";

import { cflSvg, seriesName } from "./cfl";
import { contourSvg } from "./contour";
import { convergenceSvg } from "./convergence";
import { loadCsv, loadFieldDump, loadMesh } from "./formats";

interface Args {
  command: string;
  flags: Map<string, string>;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) throw new Error("missing command");
  const command = argv[0];
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad flag ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return { command, flags };
}

function required(args: Args, name: string): string {
  const v = args.flags.get(name);
  if (!v) throw new Error(`--${name} is required`);
  return v;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    console.error("usage: sldg-viz contour|convergence|cfl --in <paths> " +
                  "[--mesh <path>] --out <svg> [--title <t>] [--levels <n>]");
    return 2;
  }
  try {
    const out = required(args, "out");
    if (args.command === "contour") {
      const mesh = loadMesh(required(args, "mesh"));
      const dump = loadFieldDump(required(args, "in"));
      const bands = args.flags.has("levels")
        ? parseInt(args.flags.get("levels")!, 10)
        : undefined;
      const body = contourSvg(mesh, dump, {
        bands,
        title: args.flags.get("title"),
      });
      fs.writeFileSync(out, body);
    } else if (args.command === "convergence") {
      const table = loadCsv(required(args, "in"));
      const { svg, slopes } = convergenceSvg(table, {
        title: args.flags.get("title"),
      });
      fs.writeFileSync(out, svg);
      for (const s of slopes) {
        console.log(`${s.norm}: fitted slope ${s.fitted.toFixed(3)} ` +
                    `(csv order ${s.csvOrder.toFixed(3)})`);
      }
    } else if (args.command === "cfl") {
      const paths = required(args, "in").split(",");
      const tables = paths.map((p) => ({ name: seriesName(p), table: loadCsv(p) }));
      fs.writeFileSync(out, cflSvg(tables, { title: args.flags.get("title") }));
    } else {
      console.error(`unknown command ${args.command}`);
      return 2;
    }
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    console.error(String(err));
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
