/** Minimal SVG assembly: linear scales, tick generation, line/marker/text
 * primitives. Figures are built as plain strings; no DOM is involved. */

export interface Extent {
  min: number;
  max: number;
}

export function extentOf(values: number[], padFraction = 0.05): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (Number.isNaN(v)) continue;
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!Number.isFinite(min)) {
    min = 0;
    max = 1;
  }
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const pad = (max - min) * padFraction;
  return { min: min - pad, max: max + pad };
}

export class LinearScale {
  constructor(
    readonly domain: Extent,
    readonly range: Extent,
  ) {}

  map(value: number): number {
    const t = (value - this.domain.min) / (this.domain.max - this.domain.min);
    return this.range.min + t * (this.range.max - this.range.min);
  }

  /** 1-2-5 tick positions covering the domain. */
  ticks(target = 6): number[] {
    const span = this.domain.max - this.domain.min;
    const rough = span / target;
    const magnitude = Math.pow(10, Math.floor(Math.log10(rough)));
    let step = magnitude;
    for (const m of [1, 2, 5, 10]) {
      if (rough <= m * magnitude) {
        step = m * magnitude;
        break;
      }
    }
    const start = Math.ceil(this.domain.min / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.domain.max + 1e-12 * span; v += step) {
      out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
    }
    return out;
  }
}

const fmt = (v: number): string =>
  Number.isInteger(v) && Math.abs(v) < 1e7
    ? String(v)
    : v.toPrecision(4).replace(/\.?0+($|e)/, "$1");

export function polylinePath(xs: number[], ys: number[]): string {
  const parts: string[] = [];
  let pen = false;
  for (let i = 0; i < xs.length; i++) {
    if (Number.isNaN(xs[i]) || Number.isNaN(ys[i])) {
      pen = false;
      continue;
    }
    parts.push(`${pen ? "L" : "M"}${xs[i].toFixed(2)} ${ys[i].toFixed(2)}`);
    pen = true;
  }
  return parts.join(" ");
}

export const SERIES_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
];

export interface PanelOptions {
  x: number;
  y: number;
  width: number;
  height: number;
  xLabel: string;
  yLabel: string;
  title?: string;
}

/** One plotting area with axes; collects SVG fragments. */
export class Panel {
  readonly xScale: LinearScale;
  readonly yScale: LinearScale;
  private parts: string[] = [];

  constructor(
    readonly opts: PanelOptions,
    xDomain: Extent,
    yDomain: Extent,
  ) {
    this.xScale = new LinearScale(xDomain, {
      min: opts.x,
      max: opts.x + opts.width,
    });
    this.yScale = new LinearScale(yDomain, {
      min: opts.y + opts.height,
      max: opts.y,
    });
  }

  line(
    xs: number[],
    ys: number[],
    stroke: string,
    options: { dashed?: boolean; cssClass?: string; width?: number } = {},
  ): void {
    const path = polylinePath(
      xs.map((v) => this.xScale.map(v)),
      ys.map((v) => this.yScale.map(v)),
    );
    if (!path) return;
    const dash = options.dashed ? ' stroke-dasharray="7 4"' : "";
    const cls = options.cssClass ? ` class="${options.cssClass}"` : "";
    const width = options.width ?? 1.6;
    this.parts.push(
      `<path${cls} d="${path}" fill="none" stroke="${stroke}" stroke-width="${width}"${dash}/>`,
    );
  }

  band(xs: number[], low: number[], high: number[], fill: string): void {
    const fwdX = xs.map((v) => this.xScale.map(v));
    const fwdY = low.map((v) => this.yScale.map(v));
    const back = polylinePath(
      [...fwdX].reverse(),
      high.map((v) => this.yScale.map(v)).reverse(),
    );
    const fwd = polylinePath(fwdX, fwdY);
    if (!fwd || !back) return;
    this.parts.push(
      `<path class="stderr-band" d="${fwd} ${back.replace(/^M/, "L")} Z" fill="${fill}" fill-opacity="0.25" stroke="none"/>`,
    );
  }

  marker(x: number, y: number, color: string, cssClass: string): void {
    this.parts.push(
      `<circle class="${cssClass}" cx="${this.xScale.map(x).toFixed(2)}" ` +
        `cy="${this.yScale.map(y).toFixed(2)}" r="4.5" fill="none" ` +
        `stroke="${color}" stroke-width="2"/>`,
    );
  }

  dot(x: number, y: number, color: string): void {
    this.parts.push(
      `<circle cx="${this.xScale.map(x).toFixed(2)}" cy="${this.yScale
        .map(y)
        .toFixed(2)}" r="3" fill="${color}"/>`,
    );
  }

  /** Axis-aligned bar in domain coordinates. */
  rect(x0: number, x1: number, y0: number, y1: number, fill: string): void {
    const px0 = this.xScale.map(x0);
    const px1 = this.xScale.map(x1);
    const py0 = this.yScale.map(y0);
    const py1 = this.yScale.map(y1);
    this.parts.push(
      `<rect class="hist-bar" x="${Math.min(px0, px1).toFixed(2)}" ` +
        `y="${Math.min(py0, py1).toFixed(2)}" ` +
        `width="${Math.abs(px1 - px0).toFixed(2)}" ` +
        `height="${Math.abs(py1 - py0).toFixed(2)}" ` +
        `fill="${fill}" stroke="#2a5d8f" stroke-width="0.5"/>`,
    );
  }

  verticalLine(x: number, stroke: string, cssClass: string): void {
    const px = this.xScale.map(x).toFixed(2);
    const { y, height } = this.opts;
    this.parts.push(
      `<path class="${cssClass}" d="M${px} ${y} L${px} ${y + height}" ` +
        `stroke="${stroke}" stroke-width="1.6" stroke-dasharray="7 4" fill="none"/>`,
    );
  }

  render(): string {
    const { x, y, width, height, xLabel, yLabel, title } = this.opts;
    const frame: string[] = [
      `<rect x="${x}" y="${y}" width="${width}" height="${height}" fill="none" stroke="#444" stroke-width="1"/>`,
    ];
    for (const t of this.xScale.ticks()) {
      const px = this.xScale.map(t).toFixed(2);
      frame.push(
        `<line x1="${px}" y1="${y + height}" x2="${px}" y2="${y + height + 5}" stroke="#444"/>`,
        `<text x="${px}" y="${y + height + 18}" font-size="11" text-anchor="middle">${fmt(t)}</text>`,
      );
    }
    for (const t of this.yScale.ticks()) {
      const py = this.yScale.map(t).toFixed(2);
      frame.push(
        `<line x1="${x - 5}" y1="${py}" x2="${x}" y2="${py}" stroke="#444"/>`,
        `<text x="${x - 8}" y="${Number(py) + 4}" font-size="11" text-anchor="end">${fmt(t)}</text>`,
      );
    }
    frame.push(
      `<text x="${x + width / 2}" y="${y + height + 36}" font-size="13" text-anchor="middle">${escapeXml(xLabel)}</text>`,
      `<text x="${x - 48}" y="${y + height / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 ${x - 48} ${y + height / 2})">${escapeXml(yLabel)}</text>`,
    );
    if (title) {
      frame.push(
        `<text x="${x + width / 2}" y="${y - 10}" font-size="15" text-anchor="middle" font-weight="bold">${escapeXml(title)}</text>`,
      );
    }
    return frame.join("\n") + "\n" + this.parts.join("\n");
  }
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface LegendEntry {
  label: string;
  color: string;
  dashed?: boolean;
}

export function legend(x: number, y: number, entries: LegendEntry[]): string {
  const parts: string[] = [];
  entries.forEach((entry, i) => {
    const ly = y + i * 18;
    const dash = entry.dashed ? ' stroke-dasharray="7 4"' : "";
    parts.push(
      `<line x1="${x}" y1="${ly}" x2="${x + 26}" y2="${ly}" stroke="${entry.color}" stroke-width="2"${dash}/>`,
      `<text x="${x + 32}" y="${ly + 4}" font-size="12">${escapeXml(entry.label)}</text>`,
    );
  });
  return parts.join("\n");
}

export function svgDocument(
  width: number,
  height: number,
  body: string,
  caption: string,
): string {
  const captionText = caption
    ? `<text x="${width / 2}" y="${height - 8}" font-size="11" text-anchor="middle" fill="#555">${escapeXml(caption)}</text>`
    : "";
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    "\n" +
    captionText +
    "\n</svg>\n"
  );
}

/** Deterministic stride decimation for very long curves (rendering only). */
export function decimate(
  xs: number[],
  ys: number[],
  maxPoints = 2400,
): [number[], number[]] {
  if (xs.length <= maxPoints) return [xs, ys];
  const stride = Math.ceil(xs.length / maxPoints);
  const outX: number[] = [];
  const outY: number[] = [];
  for (let i = 0; i < xs.length; i += stride) {
    outX.push(xs[i]);
    outY.push(ys[i]);
  }
  if ((xs.length - 1) % stride !== 0) {
    outX.push(xs[xs.length - 1]);
    outY.push(ys[ys.length - 1]);
  }
  return [outX, outY];
}
