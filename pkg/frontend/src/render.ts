import { writeFileSync } from "fs";
import { ParsedCsv, Row, SchemaError, readCsv, requireColumns } from "./csv";
import { convergenceSlope } from "./slope";
import { HEIGHT, MARGIN, Scale, Svg, WIDTH, apply, makeScale } from "./svg";

export interface PlotJob {
  kind: "convergence" | "ratio-bracket" | "profile";
  inputs: string[];
  output: string;
  title?: string;
  xlabel?: string;
  ylabel?: string;
  /** convergence: restrict to rows whose function_id equals this value */
  series?: string;
  /** convergence: grid spacing at refinement level 0 (levels halve it) */
  h0?: number;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

const XRANGE: [number, number] = [MARGIN.left, WIDTH - MARGIN.right];
const YRANGE: [number, number] = [HEIGHT - MARGIN.bottom, MARGIN.top];

export function validateJob(job: PlotJob): void {
  if (!["convergence", "ratio-bracket", "profile"].includes(job.kind)) {
    throw new SchemaError(`unknown plot kind '${job.kind}'`);
  }
  if (!job.inputs || job.inputs.length === 0) {
    throw new SchemaError("job needs at least one input CSV");
  }
  if (!job.output) {
    throw new SchemaError("job needs an output image path");
  }
}

function levelsAndErrors(csv: ParsedCsv, path: string, series?: string, h0 = 1.0) {
  requireColumns(csv, ["value", "refinement_level"], path);
  const pts: Array<[number, number]> = [];
  for (const row of csv.rows) {
    if (series !== undefined && row["function_id"] !== series) continue;
    const lvl = row["refinement_level"];
    const val = row["value"];
    if (typeof lvl === "number" && typeof val === "number" && val > 0) {
      pts.push([h0 * Math.pow(2, -lvl), val]);
    }
  }
  if (pts.length < 2) {
    throw new SchemaError(`${path}: fewer than two usable (level, error) rows`);
  }
  pts.sort((a, b) => a[0] - b[0]);
  return { h: pts.map((p) => p[0]), err: pts.map((p) => p[1]) };
}

function renderConvergence(job: PlotJob): string {
  const svg = new Svg(job.title ?? "convergence", job.xlabel ?? "h", job.ylabel ?? "error");
  const slopes: number[] = [];
  let k = 0;
  const all: Array<{ h: number[]; err: number[]; color: string }> = [];
  for (const path of job.inputs) {
    const csv = readCsv(path);
    const { h, err } = levelsAndErrors(csv, path, job.series, job.h0 ?? 1.0);
    slopes.push(convergenceSlope(h, err));
    all.push({ h, err, color: COLORS[k++ % COLORS.length] });
  }
  const sx = makeScale(all.flatMap((a) => a.h), XRANGE, true);
  const sy = makeScale(all.flatMap((a) => a.err), YRANGE, true);
  for (const a of all) {
    const xs = a.h.map((v) => apply(sx, v));
    const ys = a.err.map((v) => apply(sy, v));
    svg.polyline(xs, ys, a.color);
    xs.forEach((x, i) => svg.circle(x, ys[i], a.color));
  }
  slopes.forEach((s, i) =>
    svg.note(`slope = ${s.toFixed(2)}`, MARGIN.left + 10, MARGIN.top + 16 + 14 * i)
  );
  svg.axisTicks(sx, sy);
  return svg.render();
}

function renderRatioBracket(job: PlotJob): string {
  const svg = new Svg(job.title ?? "ratio brackets", job.xlabel ?? "refinement level", job.ylabel ?? "ratio");
  type Band = { lo: number; hi: number; med: number };
  const perLevel = new Map<number, number[]>();
  for (const path of job.inputs) {
    const csv = readCsv(path);
    requireColumns(csv, ["ratio", "refinement_level"], path);
    for (const row of csv.rows) {
      const lvl = typeof row["refinement_level"] === "number" ? (row["refinement_level"] as number) : 0;
      const r = row["ratio"];
      if (typeof r === "number" && isFinite(r)) {
        if (!perLevel.has(lvl)) perLevel.set(lvl, []);
        perLevel.get(lvl)!.push(r);
      }
    }
  }
  if (perLevel.size === 0) {
    throw new SchemaError("no usable ratio rows in the inputs");
  }
  const levels = [...perLevel.keys()].sort((a, b) => a - b);
  const bands: Band[] = levels.map((lvl) => {
    const v = perLevel.get(lvl)!.slice().sort((a, b) => a - b);
    return { lo: v[0], hi: v[v.length - 1], med: v[Math.floor(v.length / 2)] };
  });
  const sx = makeScale([levels[0] - 0.5, levels[levels.length - 1] + 0.5], XRANGE);
  const sy = makeScale(bands.flatMap((b) => [b.lo, b.hi, 1.0]), YRANGE);
  bands.forEach((b, i) => {
    const x = apply(sx, levels[i]);
    svg.band(x - 18, x + 18, apply(sy, b.lo), apply(sy, b.hi), COLORS[0]);
    svg.polyline([x - 18, x + 18], [apply(sy, b.med), apply(sy, b.med)], COLORS[1], 2);
  });
  svg.hline(apply(sy, 1.0), "#555");
  svg.note(`levels: ${levels.join(", ")}`, MARGIN.left + 10, MARGIN.top + 16);
  svg.axisTicks(sx, sy);
  return svg.render();
}

function renderProfile(job: PlotJob): string {
  const svg = new Svg(job.title ?? "weight profile", job.xlabel ?? "t", job.ylabel ?? "value");
  const seriesNames = ["rho", "r_z", "omega"];
  let k = 0;
  const collected: Array<{ t: number[]; v: number[]; color: string; name: string }> = [];
  for (const path of job.inputs) {
    const csv = readCsv(path);
    requireColumns(csv, ["t", ...seriesNames], path);
    for (const name of seriesNames) {
      const t: number[] = [];
      const v: number[] = [];
      for (const row of csv.rows) {
        if (typeof row["t"] === "number" && typeof row[name] === "number") {
          t.push(row["t"] as number);
          v.push(row[name] as number);
        }
      }
      collected.push({ t, v, color: COLORS[k++ % COLORS.length], name });
    }
  }
  const sx = makeScale(collected.flatMap((c) => c.t), XRANGE);
  const sy = makeScale(collected.flatMap((c) => c.v), YRANGE);
  collected.forEach((c, i) => {
    svg.polyline(c.t.map((v) => apply(sx, v)), c.v.map((v) => apply(sy, v)), c.color);
    svg.note(c.name, WIDTH - MARGIN.right - 70, MARGIN.top + 16 + 14 * i);
  });
  svg.axisTicks(sx, sy);
  return svg.render();
}

export function renderToString(job: PlotJob): string {
  validateJob(job);
  switch (job.kind) {
    case "convergence":
      return renderConvergence(job);
    case "ratio-bracket":
      return renderRatioBracket(job);
    case "profile":
      return renderProfile(job);
  }
}

export function render(job: PlotJob): void {
  writeFileSync(job.output, renderToString(job));
}
