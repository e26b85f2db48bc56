import type { Metric, Point } from "./types";
import { METRICS } from "./types";

/**
 * Rolling per-metric buffers of exactly what the API returned — no
 * client-side fabrication or interpolation. Points are deduplicated by
 * timestamp and trimmed to the live window.
 */
export class SeriesStore {
  private buffers = new Map<Metric, Point[]>();
  private cursors = new Map<Metric, number>();

  constructor(public windowSeconds: number = 120) {
    for (const metric of METRICS) {
      this.buffers.set(metric, []);
      this.cursors.set(metric, -1);
    }
  }

  /** Timestamp the next poll should start from (exclusive of what we hold). */
  nextFrom(metric: Metric): number {
    return (this.cursors.get(metric) ?? -1) + 1;
  }

  append(metric: Metric, points: Point[]): void {
    if (points.length === 0) return;
    const buffer = this.buffers.get(metric)!;
    let cursor = this.cursors.get(metric) ?? -1;
    for (const [ts, value] of points) {
      if (ts > cursor) {
        buffer.push([ts, value]);
        cursor = ts;
      }
    }
    this.cursors.set(metric, cursor);
    const cutoff = cursor - this.windowSeconds + 1;
    let drop = 0;
    while (drop < buffer.length && buffer[drop][0] < cutoff) drop++;
    if (drop > 0) buffer.splice(0, drop);
  }

  points(metric: Metric): readonly Point[] {
    return this.buffers.get(metric)!;
  }

  latest(metric: Metric): Point | null {
    const buffer = this.buffers.get(metric)!;
    return buffer.length > 0 ? buffer[buffer.length - 1] : null;
  }

  count(metric: Metric): number {
    return this.buffers.get(metric)!.length;
  }

  clear(): void {
    for (const metric of METRICS) {
      this.buffers.set(metric, []);
      this.cursors.set(metric, -1);
    }
  }
}
