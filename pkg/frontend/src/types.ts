export type Metric = "vrms" | "irms" | "power" | "temp" | "humidity" | "co2";

export const METRICS: Metric[] = ["irms", "vrms", "power", "temp", "humidity", "co2"];

export interface MetricInfo {
  label: string;
  unit: string;
  /** fractional digits carried on the wire; values render the same way */
  digits: number;
}

export const METRIC_INFO: Record<Metric, MetricInfo> = {
  irms: { label: "Current", unit: "A", digits: 3 },
  vrms: { label: "Voltage", unit: "V", digits: 3 },
  power: { label: "Active power", unit: "W", digits: 2 },
  temp: { label: "Air temperature", unit: "°C", digits: 3 },
  humidity: { label: "Humidity", unit: "%RH", digits: 3 },
  co2: { label: "CO₂ concentration", unit: "ppm", digits: 0 },
};

export type Point = [ts: number, value: number];

export interface SeriesResponse {
  points: Point[];
}

export interface LoginResponse {
  token: string;
  expires: number;
}

export type NotificationKind = "alert" | "maintain" | "daily_summary";

export interface NotificationItem {
  kind: NotificationKind;
  device_id: string;
  ts: number;
  subject: string;
  body: string;
  recipient?: string;
}

export interface Rules {
  swell_threshold_v: number;
  sag_threshold_v: number;
  temp_band_c: [number, number];
  humidity_band_pct: [number, number];
  co2_max_ppm: number;
  alert_cooldown_s: number;
}
