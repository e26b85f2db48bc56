import { ApiClient, ApiError } from "./api";
import { SeriesStore } from "./store";
import type { Metric, NotificationItem } from "./types";
import { METRICS } from "./types";

// far-future bound: "everything stored after the cursor"
const TO_SENTINEL = 9_999_999_999;

export interface PollerOptions {
  /** seconds between polls; the telemetry cadence is 1 Hz, so min 1 */
  intervalSeconds?: number;
  onUpdate?: () => void;
  onNotifications?: (items: NotificationItem[]) => void;
  onAuthLost?: () => void;
  onError?: (err: unknown) => void;
  setIntervalImpl?: typeof setInterval;
  clearIntervalImpl?: typeof clearInterval;
}

/**
 * Polls the six series (incrementally, from each metric's cursor) plus the
 * notification feed. A 401 from any request stops polling and hands control
 * back to the login flow.
 */
export class Poller {
  readonly intervalSeconds: number;
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  private readonly opts: PollerOptions;

  constructor(
    private readonly api: ApiClient,
    private readonly store: SeriesStore,
    private readonly device: string,
    opts: PollerOptions = {},
  ) {
    this.opts = opts;
    this.intervalSeconds = Math.max(1, opts.intervalSeconds ?? 1);
  }

  start(): void {
    if (this.timer !== null) return;
    const impl = this.opts.setIntervalImpl ?? setInterval;
    this.timer = impl(() => void this.tick(), this.intervalSeconds * 1000);
    void this.tick();
  }

  stop(): void {
    if (this.timer !== null) {
      (this.opts.clearIntervalImpl ?? clearInterval)(this.timer);
      this.timer = null;
    }
  }

  get running(): boolean {
    return this.timer !== null;
  }

  async tick(): Promise<void> {
    if (this.inFlight) return; // never stack polls behind a slow response
    this.inFlight = true;
    try {
      for (const metric of METRICS as Metric[]) {
        const from = this.store.nextFrom(metric);
        const { points } = await this.api.series(this.device, metric, from, TO_SENTINEL);
        this.store.append(metric, points);
      }
      const { notifications } = await this.api.notifications(this.device);
      this.opts.onNotifications?.(notifications);
      this.opts.onUpdate?.();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.stop();
        this.opts.onAuthLost?.();
      } else {
        this.opts.onError?.(err);
      }
    } finally {
      this.inFlight = false;
    }
  }
}
