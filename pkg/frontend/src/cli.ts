import { readFileSync, readdirSync, writeFileSync, existsSync } from "node:fs";
import { join, basename } from "node:path";
import { parseMetrics } from "./csv.js";
import {
  CurveSpec,
  renderCumulative,
  renderSamplesPerSolved,
  SamplesPerSolvedInput,
} from "./curves.js";
import { parseJsonl, renderSamplePanels } from "./samples.js";

function fail(message: string): never {
  console.error(`error: ${message}`);
  process.exit(1);
}

function parseArgs(argv: string[]): { command: string; opts: Record<string, string> } {
  const [command, ...rest] = argv;
  const opts: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith("--") || i + 1 >= rest.length) fail(`bad argument: ${key}`);
    opts[key.slice(2)] = rest[i + 1];
  }
  return { command: command ?? "", opts };
}

function labelMap(opts: Record<string, string>): Record<string, string> | undefined {
  if (!opts.labels) return undefined;
  const map: Record<string, string> = {};
  for (const pair of opts.labels.split(",")) {
    const [key, value] = pair.split("=");
    if (key && value) map[key] = value;
  }
  return map;
}

function plotCurves(opts: Record<string, string>): void {
  const runDir = opts.run ?? fail("--run <dir> required");
  const out = opts.out ?? fail("--out <file.svg> required");
  const kind = opts.kind ?? "cumulative";
  const spec: CurveSpec = { labelMap: labelMap(opts), title: opts.title };
  if (kind === "cumulative") {
    const metricsPath = join(runDir, opts.metrics ?? "metrics.csv");
    if (!existsSync(metricsPath)) fail(`no metrics file at ${metricsPath}`);
    const rows = parseMetrics(readFileSync(metricsPath, "utf-8"));
    writeFileSync(out, renderCumulative(rows, spec));
  } else if (kind === "samples-per-solved") {
    const files = readdirSync(runDir).filter((f) => /^metrics_n\d+\.csv$/.test(f));
    if (files.length === 0) fail(`no metrics_n*.csv files in ${runDir}`);
    const inputs: SamplesPerSolvedInput[] = files.map((f) => ({
      nTrain: Number(basename(f).match(/n(\d+)/)![1]),
      rows: parseMetrics(readFileSync(join(runDir, f), "utf-8")),
    }));
    writeFileSync(out, renderSamplesPerSolved(inputs, spec));
  } else {
    fail(`unknown curve kind: ${kind}`);
  }
  console.log(`wrote ${out}`);
}

function plotSamples(opts: Record<string, string>): void {
  const dir = opts.dir ?? fail("--dir <vizdir> required");
  const kind = (opts.kind ?? "pushblock").toLowerCase();
  const out = opts.out ?? fail("--out <file.svg> required");
  const panels = [
    ["1-step, observed", `observed_${kind}_onestep.jsonl`],
    ["N-step, observed", `observed_${kind}_nstep.jsonl`],
    ["1-step, learned", `learned_${kind}_onestep.jsonl`],
    ["N-step, learned", `learned_${kind}_nstep.jsonl`],
  ].map(([title, file]) => {
    const path = join(dir, file);
    if (!existsSync(path)) fail(`missing panel file: ${path}`);
    return { title, records: parseJsonl(readFileSync(path, "utf-8")) };
  });
  writeFileSync(out, renderSamplePanels(panels, opts.title ?? ""));
  console.log(`wrote ${out}`);
}

const { command, opts } = parseArgs(process.argv.slice(2));
switch (command) {
  case "plot-curves":
    plotCurves(opts);
    break;
  case "plot-samples":
    plotSamples(opts);
    break;
  default:
    fail(`usage: plot-curves|plot-samples [--options]; got "${command}"`);
}
