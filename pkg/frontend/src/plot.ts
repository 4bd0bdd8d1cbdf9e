/**
 * Figure construction in two stages: a CurveTable becomes PlotData (the
 * exact arrays the renderer draws: mean line plus band edges at mean +/- the
 * half-width column), and PlotData becomes a standalone SVG document.
 * Tests verify PlotData; the SVG stage only positions those arrays.
 */

import { CurveTable } from "./csv.js";

export interface Series {
  name: string;
  x: number[];
  mean: number[];
  bandUpper: number[];
  bandLower: number[];
  color: string;
}

export interface PlotData {
  series: Series[];
  xLabel: string;
  yLabel: string;
  title?: string;
}

const PALETTE = [
  "#2a9d2a", // 1-T2VT style: green
  "#e8851c", // 1-MGVT style: orange
  "#2464b4", // 3-T2VT style: blue
  "#8f35b4", // 3-MGVT style: violet
  "#c03030",
  "#3fae9d",
];

export function buildPlotData(table: CurveTable, title?: string): PlotData {
  const series: Series[] = [];
  let c = 0;
  for (const [name, cols] of table.columns) {
    series.push({
      name,
      x: table.x,
      mean: cols.mean,
      bandUpper: cols.mean.map((m, i) => m + cols.std[i]),
      bandLower: cols.mean.map((m, i) => m - cols.std[i]),
      color: PALETTE[c++ % PALETTE.length],
    });
  }
  return { series, xLabel: "Iterations", yLabel: "Average Return", title };
}

interface Limits {
  lo: number;
  hi: number;
}

function limits(values: number[][]): Limits {
  let lo = Infinity;
  let hi = -Infinity;
  for (const arr of values) {
    for (const v of arr) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const pad = 0.05 * (hi - lo);
  return { lo: lo - pad, hi: hi + pad };
}

const W = 720;
const H = 440;
const M = { left: 64, right: 16, top: 40, bottom: 48 };

function ticks(lo: number, hi: number, n = 6): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= n) ?? 10 * step;
  const first = Math.ceil(lo / chosen) * chosen;
  const out: number[] = [];
  for (let v = first; v <= hi + 1e-12; v += chosen) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

function fmt(v: number): string {
  return Number(v.toPrecision(6)).toString();
}

export function renderSvg(data: PlotData): string {
  const xl = limits(data.series.map((s) => s.x));
  const yl = limits(
    data.series.flatMap((s) => [s.bandUpper, s.bandLower]),
  );
  const sx = (v: number) =>
    M.left + ((v - xl.lo) / (xl.hi - xl.lo)) * (W - M.left - M.right);
  const sy = (v: number) =>
    H - M.bottom - ((v - yl.lo) / (yl.hi - yl.lo)) * (H - M.top - M.bottom);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
  );
  if (data.title) {
    parts.push(
      `<text x="${W / 2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="15">${escapeXml(data.title)}</text>`,
    );
  }

  for (const t of ticks(xl.lo, xl.hi)) {
    const px = sx(t);
    parts.push(
      `<line x1="${px.toFixed(2)}" y1="${H - M.bottom}" x2="${px.toFixed(2)}" y2="${M.top}" stroke="#dddddd" stroke-width="1"/>`,
      `<text x="${px.toFixed(2)}" y="${H - M.bottom + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(yl.lo, yl.hi)) {
    const py = sy(t);
    parts.push(
      `<line x1="${M.left}" y1="${py.toFixed(2)}" x2="${W - M.right}" y2="${py.toFixed(2)}" stroke="#dddddd" stroke-width="1"/>`,
      `<text x="${M.left - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-family="sans-serif" font-size="11">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${M.left}" y="${M.top}" width="${W - M.left - M.right}" height="${H - M.top - M.bottom}" fill="none" stroke="#333333"/>`,
    `<text x="${(M.left + W - M.right) / 2}" y="${H - 10}" text-anchor="middle" font-family="sans-serif" font-size="13">${data.xLabel}</text>`,
    `<text x="16" y="${(M.top + H - M.bottom) / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 ${(M.top + H - M.bottom) / 2})">${data.yLabel}</text>`,
  );

  for (const s of data.series) {
    const upper = s.x.map((v, i) => `${sx(v).toFixed(2)},${sy(s.bandUpper[i]).toFixed(2)}`);
    const lower = s.x
      .map((v, i) => `${sx(v).toFixed(2)},${sy(s.bandLower[i]).toFixed(2)}`)
      .reverse();
    parts.push(
      `<polygon points="${upper.concat(lower).join(" ")}" fill="${s.color}" opacity="0.18"/>`,
    );
    const line = s.x.map((v, i) => `${sx(v).toFixed(2)},${sy(s.mean[i]).toFixed(2)}`);
    parts.push(
      `<polyline points="${line.join(" ")}" fill="none" stroke="${s.color}" stroke-width="2"/>`,
    );
  }

  data.series.forEach((s, i) => {
    const lx = M.left + 12;
    const ly = M.top + 16 + 18 * i;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 24}" y2="${ly - 4}" stroke="${s.color}" stroke-width="3"/>`,
      `<text x="${lx + 30}" y="${ly}" font-family="sans-serif" font-size="12">${escapeXml(s.name)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
