/**
 * The four figure kinds rendered from the simulator's artifacts:
 *
 *   decay         energy column of a trajectory CSV against time
 *   masses        per-species mass columns of a trajectory CSV against time
 *   bubble-fit    free energy of a bubble scan against log(1/eps^2), with
 *                 the fitted line and "slope ± stderr" taken verbatim from
 *                 the scan's JSON summary (no fitting happens here)
 *   lambda-sweep  fitted slopes across a lambda sweep with the 8*pi
 *                 threshold annotated
 *
 * Rendering is read-only: rows are plotted in file order, numbers are never
 * recomputed, and identical inputs produce byte-identical SVG.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { column, columnsMatching, readCsv, Table } from "./csv.js";
import { fmt, makeFrame, STYLE } from "./svg.js";

export type FigureKind = "decay" | "masses" | "bubble-fit" | "lambda-sweep";

export interface FigureOptions {
  /** trajectory column for the decay figure (default "L") */
  column?: string;
  /** log-scale vertical axis (decay figure; requires positive values) */
  logY?: boolean;
  title?: string;
  width?: number;
  height?: number;
  /** scan index for bubble-fit when it cannot be parsed from the filename */
  scanIndex?: number;
}

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  options?: FigureOptions;
}

interface ScanSummary {
  scans: Array<{
    lambda: number;
    slope: number;
    intercept: number;
    slope_stderr: number;
    verdict: string;
    epsilons: number[];
  }>;
}

export const slopeLegend = (slope: number, stderr: number): string =>
  `slope = ${fmt(slope)} ± ${fmt(stderr)}`;

const extent = (values: number[]): [number, number] => {
  const finite = values.filter(Number.isFinite);
  if (finite.length === 0) throw new Error("no finite values to plot");
  return [Math.min(...finite), Math.max(...finite)];
};

const padded = (lo: number, hi: number, frac = 0.06): [number, number] => {
  if (lo === hi) return [lo, hi];
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
};

function drawSeries(frame: ReturnType<typeof makeFrame>, xs: number[],
                    ys: number[], color: string): void {
  const pts = xs.map((x, k) => [frame.xs(x), frame.ys(ys[k])] as [number, number]);
  if (pts.length > 1) frame.doc.polyline(pts, color);
  for (const [x, y] of pts) frame.doc.circle(x, y, pts.length > 60 ? 1.6 : 2.5, color);
}

function renderDecay(spec: FigureSpec): string {
  const table = readCsv(spec.inputs[0]);
  const opt = spec.options ?? {};
  const name = opt.column ?? "L";
  const t = column(table, "time");
  const values = column(table, name);
  const frame = makeFrame(
    padded(...extent(t)),
    opt.logY ? extent(values) : padded(...extent(values)),
    opt.title ?? `${name} along the flow`,
    "time", name,
    opt.width ?? STYLE.width, opt.height ?? STYLE.height, opt.logY ?? false);
  drawSeries(frame, t, values, STYLE.series[0]);
  return frame.doc.render();
}

function renderMasses(spec: FigureSpec): string {
  const table = readCsv(spec.inputs[0]);
  const opt = spec.options ?? {};
  const names = columnsMatching(table, "mass_");
  if (names.length === 0) throw new Error("trajectory has no mass_* columns");
  const t = column(table, "time");
  const series = names.map((n) => column(table, n));
  const lo = Math.min(...series.map((s) => extent(s)[0]));
  const hi = Math.max(...series.map((s) => extent(s)[1]));
  // conserved masses are near-constant; keep a visible band around them
  const pad = Math.max((hi - lo) * 0.25, Math.abs(hi) * 0.05, 1e-12);
  const frame = makeFrame(
    padded(...extent(t)), [lo - pad, hi + pad],
    opt.title ?? "per-species masses",
    "time", "mass",
    opt.width ?? STYLE.width, opt.height ?? STYLE.height);
  names.forEach((n, k) => {
    const color = STYLE.series[k % STYLE.series.length];
    drawSeries(frame, t, series[k], color);
    const y = STYLE.margin.top + 14 + 16 * k;
    frame.doc.line(frame.xs.range[1] - 120, y - 4, frame.xs.range[1] - 96, y - 4, color);
    frame.doc.text(frame.xs.range[1] - 90, y, n);
  });
  return frame.doc.render();
}

function matchScan(spec: FigureSpec, summary: ScanSummary): ScanSummary["scans"][0] {
  const fromName = /bubble_scan_(\d+)/.exec(path.basename(spec.inputs[0]));
  const index = spec.options?.scanIndex ?? (fromName ? Number(fromName[1]) : 0);
  const scan = summary.scans[index];
  if (!scan) throw new Error(`summary has no scan at index ${index}`);
  return scan;
}

function renderBubbleFit(spec: FigureSpec): string {
  if (spec.inputs.length < 2) {
    throw new Error("bubble-fit needs a scan CSV and the summary JSON");
  }
  const table = readCsv(spec.inputs[0]);
  if (!fs.existsSync(spec.inputs[1])) {
    throw new Error(`input file not found: ${spec.inputs[1]}`);
  }
  const summary = JSON.parse(fs.readFileSync(spec.inputs[1], "utf-8")) as ScanSummary;
  const scan = matchScan(spec, summary);
  const opt = spec.options ?? {};

  const eps = column(table, "epsilon");
  const free = column(table, "free_energy");
  const x = eps.map((e) => Math.log(1 / (e * e)));
  const frame = makeFrame(
    padded(...extent(x)), padded(...extent(free)),
    opt.title ?? `bubble fit, lambda = ${fmt(scan.lambda)}`,
    "log(1/eps^2)", "free energy",
    opt.width ?? STYLE.width, opt.height ?? STYLE.height);

  // fitted line from the JSON summary, drawn across the x-extent
  const [x0, x1] = frame.xs.domain;
  frame.doc.line(frame.xs(x0), frame.ys(scan.slope * x0 + scan.intercept),
                 frame.xs(x1), frame.ys(scan.slope * x1 + scan.intercept),
                 STYLE.fit, "6,3");
  x.forEach((xv, k) => frame.doc.circle(frame.xs(xv), frame.ys(free[k]), 3.5,
                                        STYLE.series[1]));
  const legendY = STYLE.margin.top + 14;
  frame.doc.text(frame.xs.range[0] + 10, legendY,
                 slopeLegend(scan.slope, scan.slope_stderr));
  frame.doc.text(frame.xs.range[0] + 10, legendY + 16, `verdict: ${scan.verdict}`);
  return frame.doc.render();
}

function renderLambdaSweep(spec: FigureSpec): string {
  if (!fs.existsSync(spec.inputs[0])) {
    throw new Error(`input file not found: ${spec.inputs[0]}`);
  }
  const summary = JSON.parse(fs.readFileSync(spec.inputs[0], "utf-8")) as ScanSummary;
  if (!summary.scans || summary.scans.length === 0) {
    throw new Error("summary has no scans");
  }
  const opt = spec.options ?? {};
  const lambdas = summary.scans.map((s) => s.lambda);
  const slopes = summary.scans.map((s) => s.slope);
  const eightPi = 8 * Math.PI;
  const [xl, xh] = extent(lambdas.concat([eightPi]));
  const [yl, yh] = extent(slopes.concat([0]));
  const frame = makeFrame(
    padded(xl, xh), padded(yl, yh),
    opt.title ?? "fitted slope vs mass",
    "lambda", "slope of F against log(1/eps^2)",
    opt.width ?? STYLE.width, opt.height ?? STYLE.height);

  frame.doc.line(frame.xs.range[0], frame.ys(0), frame.xs.range[1], frame.ys(0),
                 STYLE.axis, "2,3");
  frame.doc.line(frame.xs(eightPi), frame.ys.range[1], frame.xs(eightPi),
                 frame.ys.range[0], STYLE.threshold, "6,3");
  frame.doc.text(frame.xs(eightPi) + 5, STYLE.margin.top + 12, "lambda = 8pi",
                 "start", STYLE.font, STYLE.threshold);
  summary.scans.forEach((scan) => {
    const x = frame.xs(scan.lambda);
    const y = frame.ys(scan.slope);
    if (scan.verdict === "unbounded") frame.doc.square(x, y, 4, STYLE.series[1]);
    else frame.doc.circle(x, y, 4, STYLE.series[0]);
    frame.doc.text(x, y - 9, fmt(scan.slope), "middle");
  });
  const legendY = frame.ys.range[0] + 14;
  frame.doc.circle(frame.xs.range[0] + 12, legendY - 4, 4, STYLE.series[0]);
  frame.doc.text(frame.xs.range[0] + 22, legendY, "bounded");
  frame.doc.square(frame.xs.range[0] + 102, legendY - 4, 4, STYLE.series[1]);
  frame.doc.text(frame.xs.range[0] + 112, legendY, "unbounded");
  return frame.doc.render();
}

const RENDERERS: Record<FigureKind, (spec: FigureSpec) => string> = {
  "decay": renderDecay,
  "masses": renderMasses,
  "bubble-fit": renderBubbleFit,
  "lambda-sweep": renderLambdaSweep,
};

/** Render the figure and write it to spec.output; returns the SVG text. */
export function render(spec: FigureSpec): string {
  if (!spec.inputs || spec.inputs.length === 0) {
    throw new Error("figure spec needs at least one input file");
  }
  const renderer = RENDERERS[spec.kind];
  if (!renderer) throw new Error(`unknown figure kind ${JSON.stringify(spec.kind)}`);
  const svg = renderer(spec);
  fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
  fs.writeFileSync(spec.output, svg);
  return svg;
}
