/**
 * plot --csv <path>... --out <path> [--title T]
 *
 * Reads harness learning-curve CSVs, overlays their series and writes one
 * SVG figure with mean lines and shaded 95% confidence bands.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { mergeTables, parseCurveCsv, SchemaError } from "./csv.js";
import { buildPlotData, renderSvg } from "./plot.js";

export interface CliArgs {
  csv: string[];
  out: string;
  title?: string;
}

export function parseArgs(argv: string[]): CliArgs {
  const csv: string[] = [];
  let out: string | undefined;
  let title: string | undefined;
  let i = 0;
  while (i < argv.length) {
    const arg = argv[i];
    if (arg === "--csv") {
      i++;
      while (i < argv.length && !argv[i].startsWith("--")) {
        csv.push(argv[i++]);
      }
      if (csv.length === 0) {
        throw new Error("--csv requires at least one path");
      }
    } else if (arg === "--out") {
      out = argv[++i];
      i++;
    } else if (arg === "--title") {
      title = argv[++i];
      i++;
    } else {
      throw new Error(`unknown argument ${arg}`);
    }
  }
  if (csv.length === 0 || out === undefined) {
    throw new Error("usage: plot --csv <path>... --out <path> [--title T]");
  }
  return { csv, out, title };
}

export function run(args: CliArgs): void {
  const tables = args.csv.map((path) =>
    parseCurveCsv(readFileSync(path, "utf-8"), basename(path)),
  );
  const merged = mergeTables(tables, args.csv.map((p) => basename(p)));
  const svg = renderSvg(buildPlotData(merged, args.title));
  writeFileSync(args.out, svg);
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    run(args);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

if (process.argv[1] && /cli\.(ts|js)$/.test(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}
