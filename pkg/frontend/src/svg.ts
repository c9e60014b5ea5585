/** Minimal deterministic SVG builder: fixed style, no timestamps, no ids. */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { left: 64, right: 20, top: 36, bottom: 48 };

export interface Scale {
  domain: [number, number];
  range: [number, number];
  log: boolean;
}

export function makeScale(values: number[], range: [number, number], log = false): Scale {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (log) {
    lo = Math.max(lo, 1e-300);
    hi = Math.max(hi, lo * 1.0000001);
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return { domain: [lo, hi], range, log };
}

export function apply(s: Scale, v: number): number {
  const [d0, d1] = s.log ? [Math.log(s.domain[0]), Math.log(s.domain[1])] : s.domain;
  const x = s.log ? Math.log(Math.max(v, 1e-300)) : v;
  const t = (x - d0) / (d1 - d0);
  return s.range[0] + t * (s.range[1] - s.range[0]);
}

const fmt = (v: number): string => (Math.round(v * 100) / 100).toString();

export class Svg {
  private parts: string[] = [];

  constructor(public title: string, public xlabel: string, public ylabel: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`
    );
    this.parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
    this.parts.push(`<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">${esc(title)}</text>`);
    this.parts.push(
      `<text x="${WIDTH / 2}" y="${HEIGHT - 10}" text-anchor="middle">${esc(xlabel)}</text>`
    );
    this.parts.push(
      `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" transform="rotate(-90 16 ${HEIGHT / 2})">${esc(ylabel)}</text>`
    );
    this.parts.push(
      `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${WIDTH - MARGIN.left - MARGIN.right}" height="${HEIGHT - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#999"/>`
    );
  }

  polyline(xs: number[], ys: number[], color: string, width = 1.5): void {
    const pts = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
    this.parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"/>`);
  }

  circle(x: number, y: number, color: string, r = 3): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${color}"/>`);
  }

  band(x0: number, x1: number, y0: number, y1: number, color: string): void {
    const x = Math.min(x0, x1);
    const y = Math.min(y0, y1);
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(Math.abs(x1 - x0))}" height="${fmt(Math.abs(y1 - y0))}" fill="${color}" fill-opacity="0.35"/>`
    );
  }

  hline(y: number, color: string): void {
    this.parts.push(
      `<line x1="${MARGIN.left}" x2="${WIDTH - MARGIN.right}" y1="${fmt(y)}" y2="${fmt(y)}" stroke="${color}" stroke-dasharray="4 3"/>`
    );
  }

  note(text: string, x: number, y: number): void {
    this.parts.push(`<text x="${fmt(x)}" y="${fmt(y)}" fill="#333">${esc(text)}</text>`);
  }

  axisTicks(sx: Scale, sy: Scale): void {
    for (const t of [0, 0.5, 1]) {
      const vx = tickValue(sx, t);
      const px = sx.range[0] + t * (sx.range[1] - sx.range[0]);
      this.parts.push(
        `<text x="${fmt(px)}" y="${HEIGHT - MARGIN.bottom + 16}" text-anchor="middle" font-size="10">${label(vx)}</text>`
      );
      const vy = tickValue(sy, t);
      const py = sy.range[0] + t * (sy.range[1] - sy.range[0]);
      this.parts.push(
        `<text x="${MARGIN.left - 6}" y="${fmt(py + 3)}" text-anchor="end" font-size="10">${label(vy)}</text>`
      );
    }
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function tickValue(s: Scale, t: number): number {
  if (s.log) {
    const l0 = Math.log(s.domain[0]);
    const l1 = Math.log(s.domain[1]);
    return Math.exp(l0 + t * (l1 - l0));
  }
  return s.domain[0] + t * (s.domain[1] - s.domain[0]);
}

function label(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(1);
  }
  return (Math.round(v * 1000) / 1000).toString();
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
