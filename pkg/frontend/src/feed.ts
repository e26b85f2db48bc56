import type { NotificationItem } from "./types";

const KIND_LABEL: Record<string, string> = {
  alert: "ALERT",
  maintain: "MAINTAIN",
  daily_summary: "DAILY SUMMARY",
};

function formatTs(ts: number): string {
  return new Date(ts * 1000).toISOString().replace("T", " ").slice(0, 19);
}

/** Rebuild the feed list, newest first, each entry badged by kind. */
export function renderFeed(root: HTMLElement, items: NotificationItem[]): void {
  root.textContent = "";
  if (items.length === 0) {
    const empty = document.createElement("p");
    empty.className = "feed-empty";
    empty.textContent = "No notifications yet.";
    root.appendChild(empty);
    return;
  }
  const newestFirst = [...items].sort((a, b) => b.ts - a.ts);
  for (const item of newestFirst) {
    const entry = document.createElement("article");
    entry.className = `feed-item feed-${item.kind}`;

    const badge = document.createElement("span");
    badge.className = "feed-badge";
    badge.textContent = KIND_LABEL[item.kind] ?? item.kind;
    entry.appendChild(badge);

    const subject = document.createElement("strong");
    subject.textContent = item.subject;
    entry.appendChild(subject);

    const when = document.createElement("time");
    when.textContent = formatTs(item.ts);
    entry.appendChild(when);

    const body = document.createElement("p");
    body.textContent = item.body;
    entry.appendChild(body);

    root.appendChild(entry);
  }
}
