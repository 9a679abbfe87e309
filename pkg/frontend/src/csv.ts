export interface MetricsRow {
  trial: number;
  method: string;
  scheme: string;
  domain: string;
  problemIndex: number;
  solved: boolean;
  samplesUsed: number;
}

export const METRICS_HEADER =
  "trial,method,scheme,domain,problem_index,solved,samples_used";

export function parseMetrics(text: string): MetricsRow[] {
  const lines = text.trim().split("\n");
  if (lines.length === 0 || lines[0] !== METRICS_HEADER) {
    throw new Error(`malformed metrics CSV: expected header "${METRICS_HEADER}"`);
  }
  const rows: MetricsRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== 7) {
      throw new Error(`malformed metrics CSV at line ${i + 1}: ${lines[i]}`);
    }
    const [trial, method, scheme, domain, index, solved, samples] = parts;
    rows.push({
      trial: Number(trial),
      method,
      scheme,
      domain,
      problemIndex: Number(index),
      solved: solved === "1",
      samplesUsed: Number(samples),
    });
    if (
      !Number.isFinite(rows[rows.length - 1].trial) ||
      !Number.isFinite(rows[rows.length - 1].samplesUsed)
    ) {
      throw new Error(`malformed metrics CSV at line ${i + 1}: ${lines[i]}`);
    }
  }
  return rows;
}

export function labelOf(row: MetricsRow): string {
  return row.scheme === "none" ? row.method : `${row.method}+${row.scheme}`;
}
