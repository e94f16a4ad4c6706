/**
 * SVG chart scaffolding: scales, ticks, axes, legend.
 *
 * Output must be byte-identical across runs, so everything here is a pure
 * function of its inputs: fixed styles, fixed float formatting, no dates.
 */

export const WIDTH = 720;
export const HEIGHT = 420;

// margins around the plot area
const ML = 64;
const MR = 20;
const MT = 40;
const MB = 50;

export const PALETTE = [
  "#4361ee",
  "#e63946",
  "#2d6a4f",
  "#f4a261",
  "#7b2cbf",
  "#0096c7",
  "#9c6644",
  "#d81159",
  "#606c38",
  "#5e548e",
];

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

/** Tick label formatting; precision-trimmed so 0.30000000000000004 prints as 0.3. */
export function fmtNum(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) {
    return v.toExponential(0).replace("e+", "e");
  }
  return String(Number(v.toPrecision(10)));
}

export function niceTicks(min: number, max: number, count = 6): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Decade ticks for log axes. */
export function logTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (let k = Math.ceil(Math.log10(min) - 1e-9); Math.pow(10, k) <= max * (1 + 1e-9); k++) {
    ticks.push(Math.pow(10, k));
  }
  // a single decade tick reads poorly; fall back to 1-2-5 within the range
  if (ticks.length < 2) {
    const k = Math.floor(Math.log10(min));
    for (const m of [1, 2, 5, 10, 20, 50]) {
      const v = m * Math.pow(10, k);
      if (v >= min * (1 - 1e-9) && v <= max * (1 + 1e-9)) ticks.push(v);
    }
    ticks.sort((a, b) => a - b);
  }
  return [...new Set(ticks)];
}

export interface AxisSpec {
  min: number;
  max: number;
  log?: boolean;
  label: string;
}

export interface LegendEntry {
  color: string;
  label: string;
  dash?: string;
  marker?: boolean; // draw a dot instead of a line sample
}

export interface Frame {
  xOf(v: number): number;
  yOf(v: number): number;
  /** SVG prologue: header, background, title, grid, axes, tick labels. */
  open(title: string | undefined): string;
  legend(entries: LegendEntry[]): string;
  close(): string;
  readonly plotLeft: number;
  readonly plotRight: number;
  readonly plotTop: number;
  readonly plotBottom: number;
}

export function makeFrame(x: AxisSpec, y: AxisSpec): Frame {
  if (x.log && x.min <= 0) throw new Error(`log x axis needs positive range, got min ${x.min}`);
  if (y.log && y.min <= 0) throw new Error(`log y axis needs positive range, got min ${y.min}`);

  const pw = WIDTH - ML - MR;
  const ph = HEIGHT - MT - MB;
  const xa = x.log ? Math.log10(x.min) : x.min;
  const xb = x.log ? Math.log10(x.max) : x.max;
  const ya = y.log ? Math.log10(y.min) : y.min;
  const yb = y.log ? Math.log10(y.max) : y.max;

  const xOf = (v: number): number => {
    const t = x.log ? Math.log10(v) : v;
    return ML + ((t - xa) / (xb - xa || 1)) * pw;
  };
  const yOf = (v: number): number => {
    const t = y.log ? Math.log10(v) : v;
    return MT + ph - ((t - ya) / (yb - ya || 1)) * ph;
  };

  const xTicks = (x.log ? logTicks(x.min, x.max) : niceTicks(x.min, x.max, 7)).filter(
    (v) => v >= x.min - 1e-12 && v <= x.max + 1e-12,
  );
  const yTicks = (y.log ? logTicks(y.min, y.max) : niceTicks(y.min, y.max, 6)).filter(
    (v) => v >= y.min - 1e-12 && v <= y.max + 1e-12,
  );

  const open = (title: string | undefined): string => {
    let s = `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">\n`;
    s += `<rect width="${WIDTH}" height="${HEIGHT}" fill="#fff"/>\n`;
    if (title) {
      s += `<text x="${ML}" y="${MT - 16}" font-size="13" font-weight="600" fill="#222">${esc(title)}</text>\n`;
    }
    s += `<defs><clipPath id="plot"><rect x="${ML}" y="${MT}" width="${pw}" height="${ph}"/></clipPath></defs>\n`;
    for (const v of yTicks) {
      const yy = yOf(v).toFixed(2);
      s += `<line x1="${ML}" y1="${yy}" x2="${ML + pw}" y2="${yy}" stroke="#eee" stroke-width="0.6"/>\n`;
    }
    for (const v of xTicks) {
      const xx = xOf(v).toFixed(2);
      s += `<line x1="${xx}" y1="${MT}" x2="${xx}" y2="${MT + ph}" stroke="#f3f3f3" stroke-width="0.6"/>\n`;
    }
    s += `<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + ph}" stroke="#333" stroke-width="0.8"/>\n`;
    s += `<line x1="${ML}" y1="${MT + ph}" x2="${ML + pw}" y2="${MT + ph}" stroke="#333" stroke-width="0.8"/>\n`;
    for (const v of xTicks) {
      const xx = xOf(v).toFixed(2);
      s += `<line x1="${xx}" y1="${MT + ph}" x2="${xx}" y2="${MT + ph + 4}" stroke="#333" stroke-width="0.6"/>\n`;
      s += `<text x="${xx}" y="${MT + ph + 16}" text-anchor="middle" font-size="10" fill="#555">${esc(fmtNum(v))}</text>\n`;
    }
    for (const v of yTicks) {
      const yy = yOf(v);
      s += `<line x1="${ML - 4}" y1="${yy.toFixed(2)}" x2="${ML}" y2="${yy.toFixed(2)}" stroke="#333" stroke-width="0.6"/>\n`;
      s += `<text x="${ML - 7}" y="${(yy + 3.5).toFixed(2)}" text-anchor="end" font-size="10" fill="#555">${esc(fmtNum(v))}</text>\n`;
    }
    s += `<text x="${ML + pw / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="11" fill="#333">${esc(x.label)}</text>\n`;
    s += `<text x="16" y="${MT + ph / 2}" text-anchor="middle" font-size="11" fill="#333" transform="rotate(-90,16,${MT + ph / 2})">${esc(y.label)}</text>\n`;
    return s;
  };

  const legend = (entries: LegendEntry[]): string => {
    if (entries.length === 0) return "";
    const boxW = Math.max(...entries.map((e) => e.label.length)) * 6 + 34;
    const boxH = entries.length * 15 + 8;
    const bx = ML + pw - boxW - 6;
    const by = MT + 6;
    let s = `<rect x="${bx}" y="${by}" width="${boxW}" height="${boxH}" rx="3" fill="#fff" fill-opacity="0.88" stroke="#ddd" stroke-width="0.6"/>\n`;
    entries.forEach((e, i) => {
      const ly = by + 12 + i * 15;
      if (e.marker) {
        s += `<circle cx="${bx + 15}" cy="${ly - 3.5}" r="3.2" fill="${e.color}" stroke="#fff" stroke-width="0.8"/>\n`;
      } else {
        s += `<line x1="${bx + 8}" y1="${ly - 3.5}" x2="${bx + 24}" y2="${ly - 3.5}" stroke="${e.color}" stroke-width="1.6"${e.dash ? ` stroke-dasharray="${e.dash}"` : ""}/>\n`;
      }
      s += `<text x="${bx + 28}" y="${ly}" font-size="10" fill="#333">${esc(e.label)}</text>\n`;
    });
    return s;
  };

  return {
    xOf,
    yOf,
    open,
    legend,
    close: () => "</svg>\n",
    plotLeft: ML,
    plotRight: ML + pw,
    plotTop: MT,
    plotBottom: MT + ph,
  };
}

/** Polyline from data coordinates, clipped to the plot area. */
export function polyline(
  frame: Frame,
  xs: number[],
  ys: number[],
  attrs: { cls: string; color: string; width?: number; dash?: string; label?: string },
): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    pts.push(`${frame.xOf(xs[i]).toFixed(2)},${frame.yOf(ys[i]).toFixed(2)}`);
  }
  const dash = attrs.dash ? ` stroke-dasharray="${attrs.dash}"` : "";
  const label = attrs.label !== undefined ? ` data-label="${esc(attrs.label)}"` : "";
  return (
    `<polyline class="${attrs.cls}"${label} clip-path="url(#plot)" fill="none" ` +
    `stroke="${attrs.color}" stroke-width="${attrs.width ?? 1.4}"${dash} points="${pts.join(" ")}"/>\n`
  );
}
