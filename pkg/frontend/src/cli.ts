/** Command line: plot --in summary.csv --panel standard --out fig.svg */

import { readFileSync, writeFileSync } from "fs";
import { parseSummaryCsv, CsvSchemaError } from "./csv.js";
import { PANELS, PanelName, PanelDataError, hasPanelRows } from "./panels.js";
import { renderAll, renderPanel } from "./render.js";

interface Args {
  input: string;
  output: string;
  panel?: PanelName;
  all: boolean;
  logY: boolean;
}

function usage(): string {
  return [
    "usage: peleg-plot --in summary.csv (--panel NAME | --all) --out figure.svg [--log-y]",
    `panels: ${PANELS.join(", ")}`,
  ].join("\n");
}

export function parseArgs(argv: string[]): Args {
  let input = "";
  let output = "";
  let panel: PanelName | undefined;
  let all = false;
  let logY = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i++;
      if (i >= argv.length) throw new Error(`missing value for ${arg}`);
      return argv[i];
    };
    switch (arg) {
      case "--in":
        input = next();
        break;
      case "--out":
        output = next();
        break;
      case "--panel": {
        const name = next();
        if (!PANELS.includes(name as PanelName)) {
          throw new Error(`unknown panel "${name}" (expected one of ${PANELS.join(", ")})`);
        }
        panel = name as PanelName;
        break;
      }
      case "--all":
        all = true;
        break;
      case "--log-y":
        logY = true;
        break;
      default:
        throw new Error(`unknown flag ${arg}`);
    }
  }
  if (!input) throw new Error("--in is required");
  if (!output) throw new Error("--out is required");
  if (!all && !panel) throw new Error("pass --panel NAME or --all");
  return { input, output, panel, all, logY };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}\n${usage()}`);
    return 2;
  }
  try {
    const rows = parseSummaryCsv(readFileSync(args.input, "utf8"));
    let svg: string;
    if (args.all) {
      const present = PANELS.filter((p) => hasPanelRows(p, rows));
      for (const p of PANELS.filter((p) => !present.includes(p))) {
        console.error(`note: skipping panel "${p}" (no rows in the CSV)`);
      }
      if (present.length === 0) {
        throw new PanelDataError("no panel has rows in the CSV");
      }
      svg = renderAll(present, rows, { logY: args.logY });
    } else {
      svg = renderPanel(args.panel!, rows, { logY: args.logY });
    }
    writeFileSync(args.output, svg);
    console.log(`wrote ${args.output}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvSchemaError || err instanceof PanelDataError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
