/**
 * Minimal deterministic SVG plotting primitives. No randomness, no dates,
 * fixed style constants: identical inputs yield byte-identical documents.
 */

export interface Scale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
}

export const STYLE = {
  width: 640,
  height: 420,
  margin: { top: 44, right: 24, bottom: 52, left: 72 },
  axis: "#333333",
  grid: "#dddddd",
  font: "12px sans-serif",
  titleFont: "15px sans-serif",
  series: ["#1f6fb4", "#d1495b", "#3f8f4f", "#8a5fb4", "#c98a1f", "#4f8a8a"],
  fit: "#222222",
  threshold: "#888888",
};

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    // degenerate extent (e.g. a single-record trajectory): pad symmetrically
    const pad = d0 === 0 ? 1 : Math.abs(d0) * 0.5;
    d0 -= pad;
    d1 += pad;
  }
  const f = ((x: number) =>
    range[0] + ((x - d0) / (d1 - d0)) * (range[1] - range[0])) as Scale;
  f.domain = [d0, d1];
  f.range = range;
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  if (domain[0] <= 0 || domain[1] <= 0) {
    throw new Error("log scale needs strictly positive values");
  }
  const inner = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  const f = ((x: number) => inner(Math.log10(x))) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

/** Round-valued ticks covering [min, max], about n of them. */
export function ticks(min: number, max: number, n = 6): number[] {
  if (min === max) return [min];
  const span = max - min;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step0;
  const step = step0 * (err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1);
  const out: number[] = [];
  for (let i = Math.ceil(min / step); i * step <= max + step * 1e-9; i++) {
    out.push(i === 0 ? 0 : i * step);
  }
  return out;
}

/** Fixed-precision label: shortest of fixed/exponential at 4 significant digits. */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) return String(x);
  if (x === 0) return "0";
  const magnitude = Math.abs(x);
  if (magnitude >= 1e4 || magnitude < 1e-3) {
    return x.toExponential(2).replace("e+", "e");
  }
  return String(Number(x.toPrecision(4)));
}

const esc = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class SvgDoc {
  private parts: string[] = [];
  constructor(readonly width: number, readonly height: number) {}

  raw(s: string): void {
    this.parts.push(s);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       dash = "", width = 1): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" ` +
      `stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    const pts = points.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
      `stroke-width="${width}"/>`);
  }

  circle(x: number, y: number, radius: number, fill: string): void {
    this.parts.push(`<circle cx="${r(x)}" cy="${r(y)}" r="${radius}" fill="${fill}"/>`);
  }

  square(x: number, y: number, half: number, fill: string): void {
    this.parts.push(
      `<rect x="${r(x - half)}" y="${r(y - half)}" width="${2 * half}" ` +
      `height="${2 * half}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, anchor = "start",
       font = STYLE.font, fill = STYLE.axis): void {
    this.parts.push(
      `<text x="${r(x)}" y="${r(y)}" text-anchor="${anchor}" ` +
      `style="font:${font}" fill="${fill}">${esc(content)}</text>`);
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

const r = (x: number): string => {
  const v = Math.round(x * 100) / 100;
  return Object.is(v, -0) ? "0" : String(v);
};

export interface Frame {
  doc: SvgDoc;
  xs: Scale;
  ys: Scale;
}

/** Axes, grid, tick labels, and titles around a plotting frame. */
export function makeFrame(xDomain: [number, number], yDomain: [number, number],
                          title: string, xLabel: string, yLabel: string,
                          width = STYLE.width, height = STYLE.height,
                          logY = false): Frame {
  const m = STYLE.margin;
  const doc = new SvgDoc(width, height);
  const xs = linearScale(xDomain, [m.left, width - m.right]);
  const ys = (logY ? logScale : linearScale)(yDomain, [height - m.bottom, m.top]);

  const yTicks = logY
    ? ticks(Math.log10(ys.domain[0]), Math.log10(ys.domain[1]), 6).map((t) => 10 ** t)
    : ticks(ys.domain[0], ys.domain[1], 6);
  for (const t of yTicks) {
    doc.line(m.left, ys(t), width - m.right, ys(t), STYLE.grid);
    doc.text(m.left - 8, ys(t) + 4, fmt(t), "end");
  }
  const xTicks = ticks(xs.domain[0], xs.domain[1], 7);
  for (const t of xTicks) {
    doc.line(xs(t), height - m.bottom, xs(t), height - m.bottom + 5, STYLE.axis);
    doc.text(xs(t), height - m.bottom + 18, fmt(t), "middle");
  }
  doc.line(m.left, m.top, m.left, height - m.bottom, STYLE.axis);
  doc.line(m.left, height - m.bottom, width - m.right, height - m.bottom, STYLE.axis);
  doc.text(width / 2, height - 14, xLabel, "middle");
  doc.raw(`<g transform="rotate(-90 18 ${height / 2})">`);
  doc.text(18, height / 2, yLabel, "middle");
  doc.raw("</g>");
  doc.text(width / 2, 24, title, "middle", STYLE.titleFont);
  return { doc, xs, ys };
}
