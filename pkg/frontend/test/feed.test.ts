import { describe, expect, it } from "vitest";

import { renderFeed } from "../src/feed";
import type { NotificationItem } from "../src/types";

const SWELL_ALERT: NotificationItem = {
  kind: "alert",
  device_id: "desk-01",
  ts: 1700000060,
  subject: "swell alert for desk-01",
  body: "Observed 230.006 against threshold 225 at 1700000060. Voltage is above the swell threshold. Please check the power system.",
};

const MAINTAIN: NotificationItem = {
  kind: "maintain",
  device_id: "desk-01",
  ts: 1700000300,
  subject: "All readings normal for desk-01",
  body: "All readings are within the acceptable range. Please maintain the current energy consumption and environmental condition.",
};

const SUMMARY: NotificationItem = {
  kind: "daily_summary",
  device_id: "desk-01",
  ts: 1700006399,
  subject: "Daily summary for desk-01 on 2023-11-14",
  body: "Daily summary for 2023-11-14.",
};

describe("renderFeed", () => {
  it("renders a swell alert with its advice text", () => {
    const root = document.createElement("div");
    renderFeed(root, [SWELL_ALERT]);
    expect(root.textContent).toContain("check the power system");
    expect(root.textContent).toContain("swell alert for desk-01");
    expect(root.querySelector(".feed-alert")).not.toBeNull();
  });

  it("distinguishes the three notification kinds with badges", () => {
    const root = document.createElement("div");
    renderFeed(root, [SWELL_ALERT, MAINTAIN, SUMMARY]);
    const badges = [...root.querySelectorAll(".feed-badge")].map((node) => node.textContent);
    expect(badges).toContain("ALERT");
    expect(badges).toContain("MAINTAIN");
    expect(badges).toContain("DAILY SUMMARY");
    expect(root.querySelector(".feed-maintain")).not.toBeNull();
    expect(root.querySelector(".feed-daily_summary")).not.toBeNull();
  });

  it("orders newest first", () => {
    const root = document.createElement("div");
    renderFeed(root, [SWELL_ALERT, MAINTAIN, SUMMARY]);
    const subjects = [...root.querySelectorAll("strong")].map((node) => node.textContent);
    expect(subjects[0]).toContain("Daily summary");
    expect(subjects[2]).toContain("swell alert");
  });

  it("shows an empty state instead of crashing on no data", () => {
    const root = document.createElement("div");
    renderFeed(root, []);
    expect(root.textContent).toContain("No notifications yet");
  });

  it("rebuilds rather than duplicates on re-render", () => {
    const root = document.createElement("div");
    renderFeed(root, [SWELL_ALERT]);
    renderFeed(root, [SWELL_ALERT]);
    expect(root.querySelectorAll(".feed-item")).toHaveLength(1);
  });
});
