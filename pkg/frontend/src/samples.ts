import { Frame, axes, rectOutline, scatter, svgDocument } from "./svg.js";

export interface VizRecord {
  state: any;
  phi: number[];
}

export function parseJsonl(text: string): VizRecord[] {
  const trimmed = text.trim();
  if (trimmed === "") return [];
  return trimmed.split("\n").map((line, i) => {
    let row: any;
    try {
      row = JSON.parse(line);
    } catch (e) {
      throw new Error(`malformed JSONL at line ${i + 1}`);
    }
    if (!("state" in row) || !("phi" in row)) {
      throw new Error(`JSONL row ${i + 1} missing state/phi`);
    }
    return row as VizRecord;
  });
}

export interface PanelInput {
  title: string;
  records: VizRecord[];
}

function objectRect(state: any, id: string): [number, number][] | null {
  const obj = (state.objects as any[]).find((o) => o.id === id);
  if (!obj) return null;
  const [x, y, s, c, hw, hl] = obj.features;
  const theta = Math.atan2(s, c);
  const corners: [number, number][] = [];
  for (const [sx, sy] of [
    [1, 1],
    [-1, 1],
    [-1, -1],
    [1, -1],
  ]) {
    const lx = sx * hw;
    const ly = sy * hl;
    corners.push([
      x + Math.cos(theta) * lx - Math.sin(theta) * ly,
      y + Math.sin(theta) * lx + Math.cos(theta) * ly,
    ]);
  }
  return corners;
}

/** 2x2 scatter panels (observed/learned x one-step/n-step). */
export function renderSamplePanels(panels: PanelInput[], title = ""): string {
  if (panels.length !== 4) {
    throw new Error(`expected exactly 4 panels, got ${panels.length}`);
  }
  const width = 640;
  const height = 660;
  const cell = 260;
  const pad = 70;
  let body = title
    ? `<text x="${width / 2}" y="20" font-size="13" text-anchor="middle" font-weight="bold">${title}</text>`
    : "";
  const counts: Record<string, number> = {};
  panels.forEach((panel, idx) => {
    const col = idx % 2;
    const row = Math.floor(idx / 2);
    const xs = panel.records.map((r) => r.phi[0]);
    const ys = panel.records.map((r) => r.phi[1] ?? 0);
    const lo = (vals: number[], fallback: number) =>
      vals.length ? Math.min(...vals) : fallback;
    const hi = (vals: number[], fallback: number) =>
      vals.length ? Math.max(...vals) : fallback;
    const frame: Frame = {
      x0: pad + col * (cell + 40),
      y0: 40 + row * (cell + 60),
      width: cell,
      height: cell,
      xMin: Math.min(lo(xs, -1), -1) - 0.3,
      xMax: Math.max(hi(xs, 1), 1) + 0.3,
      yMin: Math.min(lo(ys, -1), -1) - 0.3,
      yMax: Math.max(hi(ys, 1), 1) + 0.3,
    };
    body += axes(frame, "phi[0]", "phi[1]", panel.title);
    const points = panel.records.map((r) => [r.phi[0], r.phi[1] ?? 0] as [number, number]);
    body += scatter(frame, points, idx % 2 === 0 ? "#1f77b4" : "#d62728");
    // Outline the manipulated object's footprint from the first record, when
    // the parameters live in world coordinates.
    const first = panel.records[0];
    if (first && first.phi.length === 2 && first.state?.objects) {
      const rect = objectRect(first.state, "container0") ?? objectRect(first.state, "block0");
      if (rect) {
        const inFrame = rect.every(
          ([x, y]) => x >= frame.xMin && x <= frame.xMax && y >= frame.yMin && y <= frame.yMax,
        );
        if (inFrame) body += rectOutline(frame, rect, "#444");
      }
    }
    counts[panel.title] = panel.records.length;
  });
  return svgDocument(width, height, body, { kind: "sample_panels", counts });
}
