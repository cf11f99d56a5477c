/** Minimal SVG scene builder: axes, polylines, scatter dots, legends. */

export interface Bounds {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Panel {
  private readonly parts: string[] = [];
  private readonly pad = 46;

  constructor(
    public readonly width: number,
    public readonly height: number,
    private bounds: Bounds,
    private readonly ox: number = 0,
    private readonly oy: number = 0,
    private readonly logX = false,
    private readonly logY = false,
  ) {
    if (logX) {
      this.bounds = { ...this.bounds, xMin: Math.log10(bounds.xMin), xMax: Math.log10(bounds.xMax) };
    }
    if (logY) {
      this.bounds = { ...this.bounds, yMin: Math.log10(bounds.yMin), yMax: Math.log10(bounds.yMax) };
    }
  }

  private sx(x: number): number {
    const v = this.logX ? Math.log10(x) : x;
    const { xMin, xMax } = this.bounds;
    const span = xMax - xMin || 1;
    return this.ox + this.pad + ((v - xMin) / span) * (this.width - 2 * this.pad);
  }

  private sy(y: number): number {
    const v = this.logY ? Math.log10(y) : y;
    const { yMin, yMax } = this.bounds;
    const span = yMax - yMin || 1;
    return this.oy + this.height - this.pad - ((v - yMin) / span) * (this.height - 2 * this.pad);
  }

  axes(xLabel: string, yLabel: string, title = ""): this {
    const x0 = this.ox + this.pad;
    const x1 = this.ox + this.width - this.pad;
    const y0 = this.oy + this.height - this.pad;
    const y1 = this.oy + this.pad;
    this.parts.push(
      `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#444"/>`,
      `<text x="${(x0 + x1) / 2}" y="${y0 + 32}" text-anchor="middle" font-size="12">${esc(xLabel)}</text>`,
      `<text x="${x0 - 34}" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 ${x0 - 34} ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
    );
    if (title) {
      this.parts.push(
        `<text x="${(x0 + x1) / 2}" y="${y1 - 8}" text-anchor="middle" font-size="13" font-weight="bold">${esc(title)}</text>`,
      );
    }
    return this;
  }

  polyline(xs: number[], ys: number[], color: string, width = 1.4, dash = ""): this {
    if (xs.length === 0) return this;
    const pts = xs.map((x, i) => `${this.sx(x).toFixed(2)},${this.sy(ys[i]).toFixed(2)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"${dashAttr}/>`,
    );
    return this;
  }

  dots(xs: number[], ys: number[], color: string, r = 2.4): this {
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(
        `<circle cx="${this.sx(xs[i]).toFixed(2)}" cy="${this.sy(ys[i]).toFixed(2)}" r="${r}" fill="${color}" fill-opacity="0.75"/>`,
      );
    }
    return this;
  }

  annotate(text: string, fx = 0.55, fy = 0.15): this {
    const x = this.ox + this.pad + fx * (this.width - 2 * this.pad);
    const y = this.oy + this.pad + fy * (this.height - 2 * this.pad);
    this.parts.push(`<text x="${x}" y="${y}" font-size="13">${esc(text)}</text>`);
    return this;
  }

  legend(entries: Array<[string, string]>): this {
    let y = this.oy + this.pad + 14;
    const x = this.ox + this.width - this.pad - 130;
    for (const [label, color] of entries) {
      this.parts.push(
        `<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" stroke="${color}" stroke-width="2"/>`,
        `<text x="${x + 28}" y="${y}" font-size="11">${esc(label)}</text>`,
      );
      y += 16;
    }
    return this;
  }

  render(): string {
    return this.parts.join("\n");
  }
}

export function svgDocument(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
  );
}

export function extent(values: number[], padFrac = 0.06): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * padFrac;
  return [lo - pad, hi + pad];
}
