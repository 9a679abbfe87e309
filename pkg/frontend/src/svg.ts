// Hand-rolled SVG plotting primitives: vector output, no DOM required.

export interface Frame {
  x0: number;
  y0: number;
  width: number;
  height: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
  logX?: boolean;
}

export const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
];

function xPos(f: Frame, x: number): number {
  const lo = f.logX ? Math.log10(f.xMin) : f.xMin;
  const hi = f.logX ? Math.log10(f.xMax) : f.xMax;
  const v = f.logX ? Math.log10(x) : x;
  const t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  return f.x0 + t * f.width;
}

function yPos(f: Frame, y: number): number {
  const t = f.yMax > f.yMin ? (y - f.yMin) / (f.yMax - f.yMin) : 0.5;
  return f.y0 + f.height - t * f.height;
}

function fmt(v: number): string {
  if (!Number.isFinite(v)) return "inf";
  if (Math.abs(v) >= 1000) return v.toFixed(0);
  if (Math.abs(v) >= 10) return v.toFixed(1);
  return v.toPrecision(3);
}

export function polyline(f: Frame, points: [number, number][], color: string): string {
  const path = points
    .map(([x, y]) => `${xPos(f, x).toFixed(2)},${yPos(f, y).toFixed(2)}`)
    .join(" ");
  return `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${path}"/>`;
}

export function scatter(
  f: Frame,
  points: [number, number][],
  color: string,
  radius = 1.6,
): string {
  const circles = points.map(
    ([x, y]) =>
      `<circle cx="${xPos(f, x).toFixed(2)}" cy="${yPos(f, y).toFixed(2)}" r="${radius}" fill="${color}" fill-opacity="0.55"/>`,
  );
  return circles.join("");
}

export function rectOutline(
  f: Frame,
  corners: [number, number][],
  color: string,
): string {
  const path = corners
    .map(([x, y]) => `${xPos(f, x).toFixed(2)},${yPos(f, y).toFixed(2)}`)
    .join(" ");
  return `<polygon fill="none" stroke="${color}" stroke-width="1" points="${path}"/>`;
}

export function axes(f: Frame, xLabel: string, yLabel: string, title = ""): string {
  const parts: string[] = [];
  parts.push(
    `<rect x="${f.x0}" y="${f.y0}" width="${f.width}" height="${f.height}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  const ticks = 5;
  for (let i = 0; i <= ticks; i++) {
    const t = i / ticks;
    let xv: number;
    if (f.logX) {
      const lo = Math.log10(f.xMin);
      const hi = Math.log10(f.xMax);
      xv = Math.pow(10, lo + t * (hi - lo));
    } else {
      xv = f.xMin + t * (f.xMax - f.xMin);
    }
    const yv = f.yMin + t * (f.yMax - f.yMin);
    const px = f.x0 + t * f.width;
    const py = f.y0 + f.height - t * f.height;
    parts.push(
      `<line x1="${px}" y1="${f.y0 + f.height}" x2="${px}" y2="${f.y0 + f.height + 4}" stroke="#333"/>`,
      `<text x="${px}" y="${f.y0 + f.height + 16}" font-size="9" text-anchor="middle">${fmt(xv)}</text>`,
      `<line x1="${f.x0 - 4}" y1="${py}" x2="${f.x0}" y2="${py}" stroke="#333"/>`,
      `<text x="${f.x0 - 6}" y="${py + 3}" font-size="9" text-anchor="end">${fmt(yv)}</text>`,
    );
  }
  parts.push(
    `<text x="${f.x0 + f.width / 2}" y="${f.y0 + f.height + 32}" font-size="11" text-anchor="middle">${xLabel}</text>`,
    `<text x="${f.x0 - 42}" y="${f.y0 + f.height / 2}" font-size="11" text-anchor="middle" transform="rotate(-90 ${f.x0 - 42} ${f.y0 + f.height / 2})">${yLabel}</text>`,
  );
  if (title) {
    parts.push(
      `<text x="${f.x0 + f.width / 2}" y="${f.y0 - 8}" font-size="12" text-anchor="middle" font-weight="bold">${title}</text>`,
    );
  }
  return parts.join("");
}

export function legend(
  x: number,
  y: number,
  entries: [string, string][],
): string {
  return entries
    .map(
      ([label, color], i) =>
        `<line x1="${x}" y1="${y + i * 14}" x2="${x + 18}" y2="${y + i * 14}" stroke="${color}" stroke-width="2"/>` +
        `<text x="${x + 24}" y="${y + i * 14 + 3}" font-size="10">${label}</text>`,
    )
    .join("");
}

export function svgDocument(
  width: number,
  height: number,
  body: string,
  metadata: object,
): string {
  const meta = JSON.stringify(metadata);
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">` +
    `<metadata>${meta}</metadata>` +
    `<rect width="${width}" height="${height}" fill="white"/>` +
    body +
    `</svg>`
  );
}

export function extractMetadata(svg: string): any {
  const match = svg.match(/<metadata>(.*?)<\/metadata>/s);
  if (!match) throw new Error("no metadata block in SVG");
  return JSON.parse(match[1]);
}
