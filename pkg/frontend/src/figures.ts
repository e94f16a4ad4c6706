/**
 * Figure renderers.
 *
 * trajectories    overlays one ell(t) curve per input CSV; a curve whose
 *                 breakdown sidecar reports a finite time T gets a marker at
 *                 its (truncated) endpoint.
 * density_overlay draws an area-1 histogram of a sample column against one or
 *                 more analytic density tables.
 * convergence     log-log scatter of per-replica sup errors over n, with the
 *                 per-n median path.
 * poc_slope       log-log medians plus the fitted power law from the fit JSON.
 */

import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";

import { readColumns } from "./csv.js";
import { FigureSpec, InputSpec, SpecError } from "./figspec.js";
import { Frame, LegendEntry, PALETTE, makeFrame, polyline } from "./svg.js";

function stem(path: string): string {
  return basename(path).replace(/\.[^.]*$/, "");
}

function color(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function readJson(path: string): Record<string, unknown> {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (e) {
    throw new SpecError(`${path}: not valid JSON: ${(e as Error).message}`);
  }
  if (raw === null || typeof raw !== "object" || Array.isArray(raw)) {
    throw new SpecError(`${path}: expected a JSON object`);
  }
  return raw as Record<string, unknown>;
}

// -- trajectories -----------------------------------------------------------

/** Sidecar announcing breakdown, written next to the curve's CSV for alpha > 1. */
function breakdownTime(inp: InputSpec): number | null {
  const sidecar = inp.breakdown ?? join(dirname(inp.path), `${stem(inp.path)}_breakdown.json`);
  if (!existsSync(sidecar)) return null;
  const obj = readJson(sidecar);
  const t = obj.T;
  return typeof t === "number" && Number.isFinite(t) ? t : null;
}

function buildTrajectories(spec: FigureSpec): string {
  const curves = spec.inputs.map((inp) => {
    const cols = readColumns(inp.path, ["t", "ell"]);
    return {
      label: inp.label ?? stem(inp.path),
      t: cols.get("t")!,
      ell: cols.get("ell")!,
      breakdown: breakdownTime(inp),
    };
  });

  const tMax = Math.max(...curves.map((c) => c.t[c.t.length - 1] ?? 0), 1e-12);
  const ellMax = Math.max(...curves.map((c) => Math.max(...c.ell, 0)), 1e-12);
  const [x0, x1] = spec.xRange ?? [0, tMax];
  const [y0, y1] = spec.yRange ?? [0, ellMax * 1.08];

  const frame = makeFrame(
    { min: x0, max: x1, label: spec.xLabel ?? "t" },
    { min: y0, max: y1, label: spec.yLabel ?? "ell" },
  );

  let s = frame.open(spec.title);
  const legend: LegendEntry[] = [];
  let anyMarker = false;
  curves.forEach((c, i) => {
    s += polyline(frame, c.t, c.ell, { cls: "curve", color: color(i), label: c.label });
    legend.push({ color: color(i), label: c.label });
  });
  // markers drawn after every curve so they sit on top
  curves.forEach((c, i) => {
    if (c.breakdown === null || c.t.length === 0) return;
    anyMarker = true;
    const cx = frame.xOf(c.t[c.t.length - 1]).toFixed(2);
    const cy = frame.yOf(c.ell[c.ell.length - 1]).toFixed(2);
    s += `<circle class="breakdown-marker" data-label="${c.label}" cx="${cx}" cy="${cy}" r="4" fill="${color(i)}" stroke="#fff" stroke-width="1.2"/>\n`;
  });
  if (anyMarker) legend.push({ color: "#555", label: "breakdown", marker: true });
  s += frame.legend(legend);
  return s + frame.close();
}

// -- density_overlay ----------------------------------------------------------

export const DEFAULT_BINS = 200;

export interface Histogram {
  edges: number[];
  density: number[];
}

/** Uniform-bin histogram on [0, 6*scale], normalized to unit area. */
export function histogram(samples: number[], bins: number, scale: number): Histogram {
  const lo = 0;
  const hi = 6 * scale;
  const width = (hi - lo) / bins;
  const counts = new Array<number>(bins).fill(0);
  let inRange = 0;
  for (const v of samples) {
    if (v < lo || v > hi) continue;
    counts[Math.min(Math.floor((v - lo) / width), bins - 1)] += 1;
    inRange += 1;
  }
  const norm = inRange > 0 ? inRange * width : 1;
  const edges: number[] = [];
  for (let i = 0; i <= bins; i++) edges.push(lo + i * width);
  return { edges, density: counts.map((c) => c / norm) };
}

function histPath(frame: Frame, h: Histogram): string {
  const y0 = frame.yOf(0).toFixed(2);
  let d = `M ${frame.xOf(h.edges[0]).toFixed(2)},${y0}`;
  for (let i = 0; i < h.density.length; i++) {
    const y = frame.yOf(h.density[i]).toFixed(2);
    d += ` L ${frame.xOf(h.edges[i]).toFixed(2)},${y}`;
    d += ` L ${frame.xOf(h.edges[i + 1]).toFixed(2)},${y}`;
  }
  d += ` L ${frame.xOf(h.edges[h.density.length]).toFixed(2)},${y0} Z`;
  return `<path class="hist" clip-path="url(#plot)" d="${d}" fill="#4361ee" fill-opacity="0.22" stroke="#4361ee" stroke-width="0.8"/>\n`;
}

function buildDensityOverlay(spec: FigureSpec): string {
  if (spec.inputs.length < 2) {
    throw new SpecError("density_overlay needs a samples CSV followed by at least one profile CSV");
  }
  const [sampleInput, ...profileInputs] = spec.inputs;
  const samples = readColumns(sampleInput.path, ["x"]).get("x")!;
  const profiles = profileInputs.map((inp) => {
    const cols = readColumns(inp.path, ["x", "density"]);
    return { label: inp.label ?? stem(inp.path), x: cols.get("x")!, density: cols.get("density")! };
  });

  const scale = spec.scale ?? 1;
  const bins = spec.bins ?? DEFAULT_BINS;
  const h = histogram(samples, bins, scale);

  const [x0, x1] = spec.xRange ?? [0, 6 * scale];
  const yTop =
    spec.yRange?.[1] ??
    1.1 *
      Math.max(
        ...h.density,
        ...profiles.flatMap((p) => p.density.filter((_, i) => p.x[i] >= x0 && p.x[i] <= x1)),
        1e-12,
      );
  const frame = makeFrame(
    { min: x0, max: x1, label: spec.xLabel ?? "x" },
    { min: spec.yRange?.[0] ?? 0, max: yTop, label: spec.yLabel ?? "density" },
  );

  let s = frame.open(spec.title);
  s += histPath(frame, h);
  const legend: LegendEntry[] = [
    { color: "#4361ee", label: `${sampleInput.label ?? stem(sampleInput.path)} (histogram)` },
  ];
  profiles.forEach((p, i) => {
    s += polyline(frame, p.x, p.density, { cls: "curve", color: color(i + 1), width: 1.8, label: p.label });
    legend.push({ color: color(i + 1), label: p.label });
  });
  s += frame.legend(legend);
  return s + frame.close();
}

// -- convergence and poc_slope ---------------------------------------------------

interface ErrorTable {
  n: number[];
  sup: number[];
  nValues: number[];
  medians: number[];
}

function readErrors(path: string): ErrorTable {
  const cols = readColumns(path, ["n", "sup_error"]);
  const n = cols.get("n")!;
  const sup = cols.get("sup_error")!;
  const nValues = [...new Set(n)].sort((a, b) => a - b);
  const medians = nValues.map((nv) => {
    const errs = sup.filter((_, i) => n[i] === nv).sort((a, b) => a - b);
    const mid = errs.length >> 1;
    return errs.length % 2 === 1 ? errs[mid] : 0.5 * (errs[mid - 1] + errs[mid]);
  });
  return { n, sup, nValues, medians };
}

function logFrame(spec: FigureSpec, tab: ErrorTable, extraY: number[] = []): Frame {
  const ys = tab.sup.concat(extraY);
  const [x0, x1] = spec.xRange ?? [Math.min(...tab.n) / 1.3, Math.max(...tab.n) * 1.3];
  const [y0, y1] = spec.yRange ?? [Math.min(...ys) / 1.4, Math.max(...ys) * 1.4];
  if (x0 <= 0 || y0 <= 0) {
    throw new SpecError(`log-log axes need positive ranges, got x >= ${x0}, y >= ${y0}`);
  }
  return makeFrame(
    { min: x0, max: x1, log: true, label: spec.xLabel ?? "n" },
    { min: y0, max: y1, log: true, label: spec.yLabel ?? "sup_error" },
  );
}

function scatter(frame: Frame, tab: ErrorTable): string {
  let s = "";
  for (let i = 0; i < tab.n.length; i++) {
    s += `<circle class="pt" cx="${frame.xOf(tab.n[i]).toFixed(2)}" cy="${frame.yOf(tab.sup[i]).toFixed(2)}" r="2.4" fill="#4361ee" fill-opacity="0.45"/>\n`;
  }
  return s;
}

function medianLine(frame: Frame, tab: ErrorTable): string {
  let s = polyline(frame, tab.nValues, tab.medians, {
    cls: "curve",
    color: "#e63946",
    width: 1.6,
    label: "median",
  });
  for (let i = 0; i < tab.nValues.length; i++) {
    s += `<circle class="median-pt" cx="${frame.xOf(tab.nValues[i]).toFixed(2)}" cy="${frame.yOf(tab.medians[i]).toFixed(2)}" r="3" fill="#e63946"/>\n`;
  }
  return s;
}

function buildConvergence(spec: FigureSpec): string {
  const tab = readErrors(spec.inputs[0].path);
  const frame = logFrame(spec, tab);
  let s = frame.open(spec.title);
  s += scatter(frame, tab);
  s += medianLine(frame, tab);
  s += frame.legend([
    { color: "#4361ee", label: "replicas", marker: true },
    { color: "#e63946", label: "median" },
  ]);
  return s + frame.close();
}

interface PocFit {
  slope: number;
  intercept: number;
}

function readFit(path: string): PocFit {
  const obj = readJson(path);
  const { slope, intercept } = obj;
  if (typeof slope !== "number" || typeof intercept !== "number") {
    throw new SpecError(`${path}: expected numeric "slope" and "intercept" fields`);
  }
  return { slope, intercept };
}

function buildPocSlope(spec: FigureSpec): string {
  if (spec.inputs.length < 2) {
    throw new SpecError("poc_slope needs the errors CSV followed by the fit JSON");
  }
  const tab = readErrors(spec.inputs[0].path);
  const fit = readFit(spec.inputs[1].path);

  const nLo = Math.min(...tab.nValues);
  const nHi = Math.max(...tab.nValues);
  const fitted = (n: number): number => Math.pow(10, fit.intercept + fit.slope * Math.log10(n));
  const frame = logFrame(spec, tab, [fitted(nLo), fitted(nHi)]);

  // sample the fitted power law densely so it stays straight under the log map
  const fx: number[] = [];
  const fy: number[] = [];
  for (let i = 0; i <= 40; i++) {
    const n = nLo * Math.pow(nHi / nLo, i / 40);
    fx.push(n);
    fy.push(fitted(n));
  }

  let s = frame.open(spec.title);
  s += scatter(frame, tab);
  s += medianLine(frame, tab);
  s += polyline(frame, fx, fy, { cls: "fit", color: "#2d6a4f", width: 1.6, dash: "7,4", label: "fit" });
  s += frame.legend([
    { color: "#4361ee", label: "replicas", marker: true },
    { color: "#e63946", label: "median" },
    { color: "#2d6a4f", label: `fit: slope ${fit.slope.toFixed(3)}`, dash: "7,4" },
  ]);
  return s + frame.close();
}

// -- dispatch -------------------------------------------------------------------

/** Build the SVG text for a validated spec without touching the filesystem output. */
export function buildFigure(spec: FigureSpec): string {
  switch (spec.kind) {
    case "trajectories":
      return buildTrajectories(spec);
    case "density_overlay":
      return buildDensityOverlay(spec);
    case "convergence":
      return buildConvergence(spec);
    case "poc_slope":
      return buildPocSlope(spec);
    default: {
      const exhausted: never = spec.kind;
      throw new SpecError(`unknown figure kind ${exhausted}`);
    }
  }
}

/** Render the figure and write it to spec.output. Returns the SVG text. */
export function render(spec: FigureSpec): string {
  const svg = buildFigure(spec);
  const dir = dirname(spec.output);
  if (dir !== "" && dir !== ".") mkdirSync(dir, { recursive: true });
  writeFileSync(spec.output, svg, "utf-8");
  return svg;
}
