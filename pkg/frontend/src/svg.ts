/** Minimal dependency-free SVG chart builder. */

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

export function color(i: number): string {
  return PALETTE[i % PALETTE.length] as string;
}

function fmtTick(x: number): string {
  if (x === 0) return "0";
  const a = Math.abs(x);
  if (a >= 1000 || a < 0.01) return x.toExponential(1);
  return String(Number(x.toPrecision(3)));
}

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class Chart {
  private parts: string[] = [];
  private legendItems: Array<{ label: string; color: string }> = [];

  constructor(
    readonly width = 640,
    readonly height = 420,
    private xDomain: [number, number] = [0, 1],
    private yDomain: [number, number] = [0, 1],
    readonly margins: Margins = { top: 40, right: 20, bottom: 45, left: 60 },
  ) {}

  setDomains(x: [number, number], y: [number, number]): void {
    const pad = (d: [number, number]): [number, number] => {
      const span = d[1] - d[0] || 1;
      return [d[0] - 0.03 * span, d[1] + 0.03 * span];
    };
    this.xDomain = pad(x);
    this.yDomain = pad(y);
  }

  sx(x: number): number {
    const [a, b] = this.xDomain;
    const w = this.width - this.margins.left - this.margins.right;
    return this.margins.left + ((x - a) / (b - a)) * w;
  }

  sy(y: number): number {
    const [a, b] = this.yDomain;
    const h = this.height - this.margins.top - this.margins.bottom;
    return this.height - this.margins.bottom - ((y - a) / (b - a)) * h;
  }

  title(text: string): void {
    this.parts.push(
      `<text x="${this.width / 2}" y="20" text-anchor="middle" ` +
        `font-size="15" font-weight="bold">${esc(text)}</text>`,
    );
  }

  axes(xLabel: string, yLabel: string, nTicks = 6): void {
    const { left, bottom } = this.margins;
    const x0 = left;
    const x1 = this.width - this.margins.right;
    const y0 = this.height - bottom;
    const y1 = this.margins.top;
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`,
    );
    for (let i = 0; i <= nTicks; i++) {
      const tx =
        this.xDomain[0] + ((this.xDomain[1] - this.xDomain[0]) * i) / nTicks;
      const ty =
        this.yDomain[0] + ((this.yDomain[1] - this.yDomain[0]) * i) / nTicks;
      const px = this.sx(tx);
      const py = this.sy(ty);
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="black"/>`,
        `<text x="${px}" y="${y0 + 16}" text-anchor="middle" font-size="10">` +
          `${fmtTick(tx)}</text>`,
        `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`,
        `<text x="${x0 - 6}" y="${py + 3}" text-anchor="end" font-size="10">` +
          `${fmtTick(ty)}</text>`,
      );
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${this.height - 8}" text-anchor="middle" ` +
        `font-size="12">${esc(xLabel)}</text>`,
      `<text x="14" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" ` +
        `transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
    );
  }

  line(
    xs: number[],
    ys: number[],
    stroke: string,
    opts: { dash?: string; label?: string; width?: number } = {},
  ): void {
    const pts = xs
      .map((x, i) => [x, ys[i]] as const)
      .filter(([, y]) => y !== undefined && Number.isFinite(y))
      .map(([x, y]) => `${this.sx(x).toFixed(2)},${this.sy(y as number).toFixed(2)}`)
      .join(" ");
    const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
        `stroke-width="${opts.width ?? 1.5}"${dash}/>`,
    );
    if (opts.label) this.legendItems.push({ label: opts.label, color: stroke });
  }

  bar(x: number, barWidth: number, y: number, fill: string, label?: string): void {
    const px = this.sx(x) - barWidth / 2;
    const py = this.sy(y);
    const base = this.sy(Math.max(this.yDomain[0] * 0 + 0, this.yDomain[0]));
    this.parts.push(
      `<rect x="${px.toFixed(2)}" y="${py.toFixed(2)}" width="${barWidth}" ` +
        `height="${Math.abs(base - py).toFixed(2)}" fill="${fill}"/>`,
    );
    if (label) {
      this.parts.push(
        `<text x="${this.sx(x)}" y="${this.height - this.margins.bottom + 16}" ` +
          `text-anchor="middle" font-size="11">${esc(label)}</text>`,
      );
    }
  }

  legend(): void {
    const x = this.margins.left + 10;
    let y = this.margins.top + 6;
    for (const item of this.legendItems) {
      this.parts.push(
        `<line x1="${x}" y1="${y}" x2="${x + 18}" y2="${y}" ` +
          `stroke="${item.color}" stroke-width="2"/>`,
        `<text x="${x + 24}" y="${y + 3}" font-size="11">${esc(item.label)}</text>`,
      );
      y += 15;
    }
  }

  toString(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}
