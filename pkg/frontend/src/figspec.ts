/**
 * Figure description consumed by render(): which CSVs to read, what kind of
 * figure to draw, and where to write the image. Loaded from a JSON file or
 * assembled from CLI flags.
 */

import { existsSync, readFileSync } from "node:fs";

export const KINDS = ["trajectories", "density_overlay", "convergence", "poc_slope"] as const;
export type FigureKind = (typeof KINDS)[number];

/** One input file; breakdown points at the sidecar JSON the simulator writes for alpha > 1. */
export interface InputSpec {
  path: string;
  label?: string;
  breakdown?: string;
}

export interface FigureSpec {
  kind: FigureKind;
  inputs: InputSpec[];
  output: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
  xRange?: [number, number];
  yRange?: [number, number];
  bins?: number; // density_overlay histogram bins, default 200
  scale?: number; // density_overlay histogram covers [0, 6*scale], default scale 1
}

export class SpecError extends Error {}

function asRange(value: unknown, key: string): [number, number] {
  if (
    !Array.isArray(value) ||
    value.length !== 2 ||
    value.some((v) => typeof v !== "number" || !Number.isFinite(v))
  ) {
    throw new SpecError(`${key} must be [lo, hi], got ${JSON.stringify(value)}`);
  }
  const [lo, hi] = value as [number, number];
  if (!(lo < hi)) throw new SpecError(`${key} must satisfy lo < hi, got [${lo}, ${hi}]`);
  return [lo, hi];
}

function asInput(value: unknown): InputSpec {
  if (typeof value === "string") return { path: value };
  if (value !== null && typeof value === "object" && typeof (value as any).path === "string") {
    const { path, label, breakdown } = value as Record<string, unknown>;
    return {
      path: path as string,
      label: label === undefined ? undefined : String(label),
      breakdown: breakdown === undefined ? undefined : String(breakdown),
    };
  }
  throw new SpecError(`input must be a path or {path, label?, breakdown?}, got ${JSON.stringify(value)}`);
}

/** Validate a raw spec object. Kinds are exhaustive; every input file must exist. */
export function normalizeSpec(raw: Record<string, unknown>): FigureSpec {
  const kind = raw.kind;
  if (typeof kind !== "string" || !(KINDS as readonly string[]).includes(kind)) {
    throw new SpecError(`unknown figure kind ${JSON.stringify(kind)}; known kinds: ${KINDS.join(", ")}`);
  }
  const rawInputs = raw.inputs;
  if (!Array.isArray(rawInputs) || rawInputs.length === 0) {
    throw new SpecError("inputs must be a nonempty list of files");
  }
  const inputs = rawInputs.map(asInput);
  for (const inp of inputs) {
    if (!existsSync(inp.path)) throw new SpecError(`input file not found: ${inp.path}`);
    if (inp.breakdown !== undefined && !existsSync(inp.breakdown)) {
      throw new SpecError(`breakdown file not found: ${inp.breakdown}`);
    }
  }
  if (typeof raw.output !== "string" || raw.output === "") {
    throw new SpecError("output must name the image file to write");
  }
  const spec: FigureSpec = { kind: kind as FigureKind, inputs, output: raw.output };
  if (raw.title !== undefined) spec.title = String(raw.title);
  if (raw.xLabel !== undefined) spec.xLabel = String(raw.xLabel);
  if (raw.yLabel !== undefined) spec.yLabel = String(raw.yLabel);
  if (raw.xRange !== undefined) spec.xRange = asRange(raw.xRange, "xRange");
  if (raw.yRange !== undefined) spec.yRange = asRange(raw.yRange, "yRange");
  if (raw.bins !== undefined) {
    const bins = Number(raw.bins);
    if (!Number.isInteger(bins) || bins < 1) throw new SpecError(`bins must be a positive integer, got ${raw.bins}`);
    spec.bins = bins;
  }
  if (raw.scale !== undefined) {
    const scale = Number(raw.scale);
    if (!(scale > 0)) throw new SpecError(`scale must be positive, got ${raw.scale}`);
    spec.scale = scale;
  }
  return spec;
}

export function loadSpec(path: string): FigureSpec {
  if (!existsSync(path)) throw new SpecError(`figure spec not found: ${path}`);
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (e) {
    throw new SpecError(`${path}: not valid JSON: ${(e as Error).message}`);
  }
  if (raw === null || typeof raw !== "object" || Array.isArray(raw)) {
    throw new SpecError(`${path}: figure spec must be a JSON object`);
  }
  return normalizeSpec(raw as Record<string, unknown>);
}
