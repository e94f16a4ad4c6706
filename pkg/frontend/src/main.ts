/**
 * Figure rendering script.
 *
 * Two invocation forms:
 *
 *   node dist/main.js figure.json
 *   node dist/main.js --kind trajectories --input a.csv --input b.csv --output fig.svg
 *
 * The JSON form carries the full FigureSpec (including per-input labels and
 * breakdown sidecars); the flag form covers the common fields. Exit codes:
 * 0 ok, 2 bad spec or arguments, 3 render failure (unreadable input data).
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { CsvError } from "./csv.js";
import { FigureSpec, KINDS, SpecError, loadSpec, normalizeSpec } from "./figspec.js";
import { render } from "./figures.js";

const USAGE = `usage:
  main.js <figure-spec.json>
  main.js --kind <${KINDS.join("|")}> --input <file> [--input <file> ...] --output <image.svg>
          [--label <text> ...] [--title <text>] [--x-label <text>] [--y-label <text>]
          [--x-range lo:hi] [--y-range lo:hi] [--bins <int>] [--scale <num>]

--label entries pair with --input entries in order. Breakdown sidecars
(<input>_breakdown.json) are picked up automatically for trajectories; use the
JSON form to point somewhere else.`;

function parseRange(text: string, flag: string): [number, number] {
  const parts = text.split(":").map(Number);
  if (parts.length !== 2 || parts.some(Number.isNaN)) {
    throw new SpecError(`${flag} expects lo:hi, got "${text}"`);
  }
  return [parts[0], parts[1]];
}

export function specFromArgv(argv: string[]): FigureSpec {
  const { values, positionals } = parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      kind: { type: "string" },
      input: { type: "string", multiple: true },
      output: { type: "string" },
      label: { type: "string", multiple: true },
      title: { type: "string" },
      "x-label": { type: "string" },
      "y-label": { type: "string" },
      "x-range": { type: "string" },
      "y-range": { type: "string" },
      bins: { type: "string" },
      scale: { type: "string" },
    },
  });

  if (positionals.length > 0) {
    if (positionals.length > 1 || values.kind !== undefined) {
      throw new SpecError("give one figure-spec file or --kind flags, not both");
    }
    return loadSpec(positionals[0]);
  }

  const labels = values.label ?? [];
  const inputs = (values.input ?? []).map((path, i) => ({
    path,
    label: labels[i],
  }));
  return normalizeSpec({
    kind: values.kind,
    inputs,
    output: values.output,
    title: values.title,
    xLabel: values["x-label"],
    yLabel: values["y-label"],
    xRange: values["x-range"] === undefined ? undefined : parseRange(values["x-range"], "--x-range"),
    yRange: values["y-range"] === undefined ? undefined : parseRange(values["y-range"], "--y-range"),
    bins: values.bins === undefined ? undefined : Number(values.bins),
    scale: values.scale === undefined ? undefined : Number(values.scale),
  });
}

export function runCli(argv: string[]): number {
  if (argv.length === 0 || argv.includes("--help") || argv.includes("-h")) {
    console.error(USAGE);
    return argv.length === 0 ? 2 : 0;
  }
  let spec: FigureSpec;
  try {
    spec = specFromArgv(argv);
  } catch (e) {
    console.error(`${(e as Error).constructor.name}: ${(e as Error).message}`);
    return 2;
  }
  try {
    render(spec);
  } catch (e) {
    if (e instanceof SpecError) {
      console.error(`SpecError: ${e.message}`);
      return 2;
    }
    if (e instanceof CsvError) {
      console.error(`CsvError: ${e.message}`);
      return 3;
    }
    throw e;
  }
  console.log(spec.output);
  return 0;
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(runCli(process.argv.slice(2)));
}
