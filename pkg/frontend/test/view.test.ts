import { describe, expect, it } from "vitest";

import { computeScale } from "../src/chart";
import { formatValue, guidesFor } from "../src/main";
import type { Rules } from "../src/types";

const RULES: Rules = {
  swell_threshold_v: 225.0,
  sag_threshold_v: 219.0,
  temp_band_c: [18.0, 28.0],
  humidity_band_pct: [30.0, 70.0],
  co2_max_ppm: 1000,
  alert_cooldown_s: 600,
};

describe("guidesFor", () => {
  it("voltage panel carries both power-quality thresholds", () => {
    const guides = guidesFor("vrms", RULES);
    expect(guides.map((g) => g.value)).toEqual([225.0, 219.0]);
  });

  it("comfort panels carry their band edges", () => {
    expect(guidesFor("temp", RULES).map((g) => g.value)).toEqual([18.0, 28.0]);
    expect(guidesFor("co2", RULES).map((g) => g.value)).toEqual([1000]);
  });

  it("power and current have no guide-lines", () => {
    expect(guidesFor("power", RULES)).toEqual([]);
    expect(guidesFor("irms", RULES)).toEqual([]);
  });

  it("missing rules mean no guides, not a crash", () => {
    expect(guidesFor("vrms", null)).toEqual([]);
  });
});

describe("formatValue", () => {
  it("renders with wire precision", () => {
    expect(formatValue("vrms", 222.0001)).toBe("222.000");
    expect(formatValue("power", 1642.834)).toBe("1642.83");
    expect(formatValue("co2", 566)).toBe("566");
  });
});

describe("computeScale", () => {
  it("stretches the scale to include guide lines", () => {
    const scale = computeScale(
      [
        [0, 221],
        [1, 223],
      ],
      [{ value: 225, label: "swell" }],
    );
    expect(scale.max).toBeGreaterThan(225);
    expect(scale.min).toBeLessThan(221);
  });

  it("handles flat series", () => {
    const scale = computeScale([[0, 5]]);
    expect(scale.max).toBeGreaterThan(scale.min);
  });

  it("handles empty series", () => {
    expect(computeScale([])).toEqual({ min: 0, max: 1 });
  });
});
