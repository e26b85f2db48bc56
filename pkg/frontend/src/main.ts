import { ApiClient, ApiError } from "./api";
import { drawChart, GuideLine } from "./chart";
import { renderFeed } from "./feed";
import { Poller } from "./poller";
import { SeriesStore } from "./store";
import type { Metric, Rules } from "./types";
import { METRIC_INFO, METRICS } from "./types";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

export function guidesFor(metric: Metric, rules: Rules | null): GuideLine[] {
  if (rules === null) return [];
  switch (metric) {
    case "vrms":
      return [
        { value: rules.swell_threshold_v, label: `swell ${rules.swell_threshold_v} V` },
        { value: rules.sag_threshold_v, label: `sag ${rules.sag_threshold_v} V` },
      ];
    case "temp":
      return rules.temp_band_c.map((v, i) => ({ value: v, label: `${i === 0 ? "min" : "max"} ${v}` }));
    case "humidity":
      return rules.humidity_band_pct.map((v, i) => ({
        value: v,
        label: `${i === 0 ? "min" : "max"} ${v}`,
      }));
    case "co2":
      return [{ value: rules.co2_max_ppm, label: `max ${rules.co2_max_ppm} ppm` }];
    default:
      return [];
  }
}

export function formatValue(metric: Metric, value: number): string {
  return value.toFixed(METRIC_INFO[metric].digits);
}

class App {
  private api = new ApiClient();
  private store = new SeriesStore(120);
  private poller: Poller | null = null;
  private rules: Rules | null = null;

  start(): void {
    el<HTMLFormElement>("login-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.login();
    });
    el<HTMLInputElement>("window-input").addEventListener("change", () => {
      const seconds = Math.max(10, Number(el<HTMLInputElement>("window-input").value) || 120);
      this.store.windowSeconds = seconds;
    });
    this.showLogin("");
  }

  private showLogin(message: string): void {
    this.poller?.stop();
    this.poller = null;
    this.api.setToken(null);
    this.store.clear();
    el("login-error").textContent = message;
    el("login-view").hidden = false;
    el("dashboard-view").hidden = true;
  }

  private async login(): Promise<void> {
    const username = el<HTMLInputElement>("username").value;
    const password = el<HTMLInputElement>("password").value;
    const device = el<HTMLInputElement>("device").value.trim();
    try {
      await this.api.login(username, password);
    } catch (err) {
      const detail = err instanceof ApiError && err.status === 401 ? "invalid credentials" : "login failed";
      this.showLogin(detail);
      return;
    }
    try {
      this.rules = await this.api.rules();
    } catch {
      this.rules = null; // charts still work, just without guide-lines
    }
    el("login-view").hidden = true;
    el("dashboard-view").hidden = false;
    el("device-label").textContent = device;
    const interval = Math.max(1, Number(el<HTMLInputElement>("interval-input").value) || 1);
    this.poller = new Poller(this.api, this.store, device, {
      intervalSeconds: interval,
      onUpdate: () => this.redraw(),
      onNotifications: (items) => renderFeed(el("feed"), items),
      onAuthLost: () => this.showLogin("session expired, please log in again"),
      onError: () => {
        el("status").textContent = "service unreachable, retrying…";
      },
    });
    this.poller.start();
  }

  private redraw(): void {
    el("status").textContent = "";
    for (const metric of METRICS) {
      const canvas = el<HTMLCanvasElement>(`chart-${metric}`);
      drawChart(canvas, this.store.points(metric), this.store.windowSeconds, guidesFor(metric, this.rules));
      const latest = this.store.latest(metric);
      el(`value-${metric}`).textContent =
        latest === null ? "—" : `${formatValue(metric, latest[1])} ${METRIC_INFO[metric].unit}`;
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("login-view") !== null) {
  new App().start();
}
