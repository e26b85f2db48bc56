import type { Point } from "./types";

export interface GuideLine {
  value: number;
  label: string;
}

export interface ChartScale {
  min: number;
  max: number;
}

/** Y extent padded a little, stretched to include every guide-line. */
export function computeScale(points: readonly Point[], guides: GuideLine[] = []): ChartScale {
  const values = points.map(([, v]) => v);
  for (const guide of guides) values.push(guide.value);
  if (values.length === 0) return { min: 0, max: 1 };
  let min = Math.min(...values);
  let max = Math.max(...values);
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const pad = (max - min) * 0.1;
  return { min: min - pad, max: max + pad };
}

export function drawChart(
  canvas: HTMLCanvasElement,
  points: readonly Point[],
  windowSeconds: number,
  guides: GuideLine[] = [],
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151d";
  ctx.fillRect(0, 0, width, height);
  if (points.length === 0) {
    ctx.fillStyle = "#71809a";
    ctx.font = "13px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("no data yet", width / 2, height / 2);
    return;
  }
  const scale = computeScale(points, guides);
  const tEnd = points[points.length - 1][0];
  const tStart = tEnd - windowSeconds + 1;
  const x = (ts: number) => ((ts - tStart) / Math.max(windowSeconds - 1, 1)) * (width - 8) + 4;
  const y = (v: number) => height - 4 - ((v - scale.min) / (scale.max - scale.min)) * (height - 8);

  ctx.strokeStyle = "#b3483f";
  ctx.setLineDash([5, 4]);
  ctx.font = "11px system-ui, sans-serif";
  ctx.textAlign = "left";
  for (const guide of guides) {
    const gy = y(guide.value);
    ctx.beginPath();
    ctx.moveTo(0, gy);
    ctx.lineTo(width, gy);
    ctx.stroke();
    ctx.fillStyle = "#b3483f";
    ctx.fillText(guide.label, 6, gy - 4);
  }
  ctx.setLineDash([]);

  ctx.strokeStyle = "#4cc2ff";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach(([ts, v], index) => {
    if (index === 0) ctx.moveTo(x(ts), y(v));
    else ctx.lineTo(x(ts), y(v));
  });
  ctx.stroke();
}
