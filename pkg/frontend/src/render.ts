/** Errorbar-figure assembly: one SVG panel per setting, one series per algorithm. */

import { SummaryRow } from "./csv.js";
import { PanelName, panelDef, panelRows } from "./panels.js";
import { fmt, linearScale, logScale, Scale } from "./scale.js";

export interface RenderOptions {
  logY?: boolean;
  width?: number;
  height?: number;
}

const MARGIN = { top: 34, right: 20, bottom: 46, left: 78 };

// color-blind-safe palette; algorithms are assigned in sorted order so the
// same CSV always yields the same bytes
const PALETTE = ["#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00", "#56b4e9"];

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

interface Series {
  algorithm: string;
  color: string;
  points: { x: number; mean: number; std: number }[];
}

function buildSeries(rows: SummaryRow[]): Series[] {
  const names = [...new Set(rows.map((r) => r.algorithm))].sort();
  return names.map((name, i) => ({
    algorithm: name,
    color: PALETTE[i % PALETTE.length],
    points: rows
      .filter((r) => r.algorithm === name)
      .map((r) => ({ x: r.param, mean: r.mean_tau, std: r.std_tau })),
  }));
}

function axisSvg(x: Scale, y: Scale, w: number, h: number, xLabel: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = w - MARGIN.right;
  const y0 = h - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
  for (const t of x.ticks()) {
    const px = fmt(x.toPixel(t), 8);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${y0 + 18}" font-size="11" text-anchor="middle">${fmt(t, 4)}</text>`,
    );
  }
  for (const t of y.ticks()) {
    const py = fmt(y.toPixel(t), 8);
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle">${fmt(t, 4)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${h - 10}" font-size="13" text-anchor="middle">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${(y0 + y1) / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 ${(y0 + y1) / 2})">samples</text>`,
  );
  return parts.join("\n");
}

function seriesSvg(series: Series, x: Scale, y: Scale): string {
  const parts: string[] = [`<g data-series="${esc(series.algorithm)}">`];
  const line = series.points
    .map((p) => `${fmt(x.toPixel(p.x), 8)},${fmt(y.toPixel(p.mean), 8)}`)
    .join(" ");
  parts.push(
    `<polyline points="${line}" fill="none" stroke="${series.color}" stroke-width="1.5"/>`,
  );
  for (const p of series.points) {
    const px = fmt(x.toPixel(p.x), 8);
    const yLo = fmt(y.toPixel(Math.max(p.mean - p.std, y.domain[0])), 8);
    const yHi = fmt(y.toPixel(p.mean + p.std), 8);
    const py = fmt(y.toPixel(p.mean), 8);
    parts.push(
      `<line class="errorbar" x1="${px}" y1="${yLo}" x2="${px}" y2="${yHi}" stroke="${series.color}"/>`,
    );
    for (const cap of [yLo, yHi]) {
      parts.push(
        `<line x1="${Number(px) - 4}" y1="${cap}" x2="${Number(px) + 4}" y2="${cap}" stroke="${series.color}"/>`,
      );
    }
    parts.push(`<circle cx="${px}" cy="${py}" r="3" fill="${series.color}"/>`);
  }
  parts.push("</g>");
  return parts.join("\n");
}

function legendSvg(series: Series[], w: number): string {
  const parts: string[] = ['<g data-role="legend">'];
  series.forEach((s, i) => {
    const y = MARGIN.top + 6 + i * 16;
    const x = w - MARGIN.right - 150;
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 18}" y2="${y}" stroke="${s.color}" stroke-width="2"/>`,
    );
    parts.push(
      `<text x="${x + 24}" y="${y + 4}" font-size="11">${esc(s.algorithm)}</text>`,
    );
  });
  parts.push("</g>");
  return parts.join("\n");
}

/** Render one panel of the summary rows as a standalone SVG string. */
export function renderPanel(
  panel: PanelName,
  rows: SummaryRow[],
  options: RenderOptions = {},
): string {
  const { logY = false, width = 640, height = 440 } = options;
  const def = panelDef(panel);
  const data = panelRows(panel, rows);
  const series = buildSeries(data);

  const xs = data.map((r) => r.param);
  const los = data.map((r) => Math.max(r.mean_tau - r.std_tau, 1));
  const his = data.map((r) => r.mean_tau + r.std_tau);
  const x = linearScale(Math.min(...xs), Math.max(...xs), MARGIN.left, width - MARGIN.right);
  const yLo = logY ? Math.min(...los) : Math.min(0, ...los);
  const yHi = Math.max(...his) * 1.05;
  const y = logY
    ? logScale(yLo, yHi, height - MARGIN.bottom, MARGIN.top)
    : linearScale(yLo, yHi, height - MARGIN.bottom, MARGIN.top);

  const body = [
    `<text x="${width / 2}" y="20" font-size="14" text-anchor="middle" font-weight="bold">${esc(def.title)}</text>`,
    axisSvg(x, y, width, height, def.xLabel),
    ...series.map((s) => seriesSvg(s, x, y)),
    legendSvg(series, width),
  ].join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}" font-family="sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
  );
}

/** Side-by-side layout of several panels in one SVG document. */
export function renderAll(
  panels: PanelName[],
  rows: SummaryRow[],
  options: RenderOptions = {},
): string {
  const width = options.width ?? 640;
  const height = options.height ?? 440;
  const inner = panels.map((panel, i) => {
    const svg = renderPanel(panel, rows, options)
      .replace(/^<svg[^>]*>\n/, "")
      .replace(/<\/svg>\n$/, "");
    return `<g transform="translate(${i * width} 0)">\n${svg}\n</g>`;
  });
  const total = width * panels.length;
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${total} ${height}" ` +
    `width="${total}" height="${height}" font-family="sans-serif">\n` +
    inner.join("\n") +
    "\n</svg>\n"
  );
}
