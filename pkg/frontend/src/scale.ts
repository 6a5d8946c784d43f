/** Linear and log axis scales with tick generation, deterministic output. */

export interface Scale {
  toPixel(value: number): number;
  ticks(): number[];
  domain: [number, number];
}

/** Round a span to a "nice" tick step (1/2/5 times a power of ten). */
function niceStep(span: number, target: number): number {
  const raw = span / Math.max(target, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const factor = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10;
  return factor * mag;
}

export function linearScale(
  lo: number,
  hi: number,
  pixelLo: number,
  pixelHi: number,
  tickTarget = 5,
): Scale {
  if (hi <= lo) {
    // degenerate single-value domain: pad symmetrically
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1;
    lo -= pad;
    hi += pad;
  }
  const step = niceStep(hi - lo, tickTarget);
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return {
    domain: [lo, hi],
    toPixel: (v) => pixelLo + ((v - lo) / (hi - lo)) * (pixelHi - pixelLo),
    ticks: () => ticks,
  };
}

export function logScale(
  lo: number,
  hi: number,
  pixelLo: number,
  pixelHi: number,
): Scale {
  const floor = Math.max(lo, 1e-12);
  const l0 = Math.log10(floor);
  let l1 = Math.log10(Math.max(hi, floor * 10));
  if (l1 - l0 < 1e-9) {
    l1 = l0 + 1;
  }
  const ticks: number[] = [];
  for (let e = Math.ceil(l0 - 1e-9); e <= Math.floor(l1 + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  return {
    domain: [Math.pow(10, l0), Math.pow(10, l1)],
    toPixel: (v) =>
      pixelLo +
      ((Math.log10(Math.max(v, floor)) - l0) / (l1 - l0)) * (pixelHi - pixelLo),
    ticks: () => ticks,
  };
}

/** Fixed, locale-independent number formatting for SVG text and paths. */
export function fmt(value: number, digits = 6): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e6 || abs < 1e-3) {
    return value.toExponential(2);
  }
  const s = value.toFixed(Math.max(0, digits - Math.floor(Math.log10(abs)) - 1));
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}
