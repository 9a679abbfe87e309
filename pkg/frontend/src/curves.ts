import { MetricsRow, labelOf } from "./csv.js";
import { Frame, PALETTE, axes, legend, polyline, svgDocument } from "./svg.js";

export interface CurveSpec {
  labelMap?: Record<string, string>;
  title?: string;
}

export interface Curve {
  label: string;
  points: [number, number][]; // cumulative samples -> cumulative solved
}

/** Mean cumulative (samples, solved) curve per method label across trials. */
export function cumulativeCurves(rows: MetricsRow[]): Curve[] {
  const labels = [...new Set(rows.map(labelOf))].sort();
  const curves: Curve[] = [];
  for (const label of labels) {
    const subset = rows.filter((r) => labelOf(r) === label);
    const trials = [...new Set(subset.map((r) => r.trial))].sort((a, b) => a - b);
    const perIndex = new Map<number, { s: number[]; v: number[] }>();
    for (const trial of trials) {
      const seq = subset
        .filter((r) => r.trial === trial)
        .sort((a, b) => a.problemIndex - b.problemIndex);
      let cumS = 0;
      let cumV = 0;
      seq.forEach((r, pos) => {
        cumS += r.samplesUsed;
        cumV += r.solved ? 1 : 0;
        const cell = perIndex.get(pos) ?? { s: [], v: [] };
        cell.s.push(cumS);
        cell.v.push(cumV);
        perIndex.set(pos, cell);
      });
    }
    const points: [number, number][] = [...perIndex.keys()]
      .sort((a, b) => a - b)
      .map((pos) => {
        const cell = perIndex.get(pos)!;
        const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / xs.length;
        return [mean(cell.s), mean(cell.v)];
      });
    curves.push({ label, points });
  }
  return curves;
}

export function totalsByLabel(rows: MetricsRow[]): Record<string, { solved: number; samples: number }> {
  const out: Record<string, { solved: number; samples: number }> = {};
  for (const r of rows) {
    const label = labelOf(r);
    out[label] ??= { solved: 0, samples: 0 };
    out[label].solved += r.solved ? 1 : 0;
    out[label].samples += r.samplesUsed;
  }
  return out;
}

export function assertNondecreasing(curve: Curve): void {
  for (let i = 1; i < curve.points.length; i++) {
    if (
      curve.points[i][0] < curve.points[i - 1][0] ||
      curve.points[i][1] < curve.points[i - 1][1]
    ) {
      throw new Error(`cumulative curve for ${curve.label} is not nondecreasing`);
    }
  }
}

export function renderCumulative(rows: MetricsRow[], spec: CurveSpec = {}): string {
  const curves = cumulativeCurves(rows);
  curves.forEach(assertNondecreasing);
  const width = 640;
  const height = 420;
  const frame: Frame = {
    x0: 70,
    y0: 40,
    width: width - 260,
    height: height - 110,
    xMin: 0,
    xMax: Math.max(1, ...curves.flatMap((c) => c.points.map((p) => p[0]))),
    yMin: 0,
    yMax: Math.max(1, ...curves.flatMap((c) => c.points.map((p) => p[1]))),
  };
  let body = axes(frame, "generated samples", "cumulative problems solved", spec.title ?? "");
  const entries: [string, string][] = [];
  curves.forEach((curve, i) => {
    const color = PALETTE[i % PALETTE.length];
    body += polyline(frame, curve.points, color);
    entries.push([spec.labelMap?.[curve.label] ?? curve.label, color]);
  });
  body += legend(width - 180, 60, entries);
  const metadata = {
    kind: "cumulative",
    curves: curves.map((c) => ({
      label: c.label,
      n_points: c.points.length,
      endpoint: c.points[c.points.length - 1] ?? [0, 0],
    })),
  };
  return svgDocument(width, height, body, metadata);
}

export interface SamplesPerSolvedInput {
  nTrain: number;
  rows: MetricsRow[];
}

export function samplesPerSolved(rows: MetricsRow[]): Record<string, number> {
  const totals = totalsByLabel(rows);
  const out: Record<string, number> = {};
  for (const [label, t] of Object.entries(totals)) {
    out[label] = t.solved > 0 ? t.samples / t.solved : Number.POSITIVE_INFINITY;
  }
  return out;
}

/** Samples-per-solved against training set size, log-scale x axis. */
export function renderSamplesPerSolved(
  inputs: SamplesPerSolvedInput[],
  spec: CurveSpec = {},
): string {
  if (inputs.length === 0) throw new Error("no metrics tables given");
  const sorted = [...inputs].sort((a, b) => a.nTrain - b.nTrain);
  const labels = [...new Set(sorted.flatMap((inp) => Object.keys(samplesPerSolved(inp.rows))))].sort();
  const series = labels.map((label) => ({
    label,
    points: sorted
      .map((inp) => [inp.nTrain, samplesPerSolved(inp.rows)[label]] as [number, number])
      .filter((p) => Number.isFinite(p[1])),
  }));
  const width = 640;
  const height = 420;
  const yMax = Math.max(1, ...series.flatMap((s) => s.points.map((p) => p[1])));
  const frame: Frame = {
    x0: 70,
    y0: 40,
    width: width - 260,
    height: height - 110,
    xMin: sorted[0].nTrain,
    xMax: sorted[sorted.length - 1].nTrain,
    yMin: 0,
    yMax,
    logX: true,
  };
  let body = axes(frame, "training tasks per domain (log scale)", "samples per solved problem", spec.title ?? "");
  const entries: [string, string][] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    if (s.points.length > 0) body += polyline(frame, s.points, color);
    entries.push([spec.labelMap?.[s.label] ?? s.label, color]);
  });
  body += legend(width - 180, 60, entries);
  const metadata = {
    kind: "samples_per_solved",
    n_train: sorted.map((i) => i.nTrain),
    series: series.map((s) => ({ label: s.label, n_points: s.points.length })),
  };
  return svgDocument(width, height, body, metadata);
}
