"""Per-record rule evaluation, alert dispatch, and periodic notices.

Rules are plain thresholds: RMS voltage above the swell line or below the
sag line, and comfort bands for temperature, humidity and CO2. Every alert
carries the observed value, the crossed threshold, and an advice text; a
cooldown keeps a sustained violation from flooding the outbox.
"""

from __future__ import annotations

import json
import threading
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

EVENT_KINDS = (
    "swell",
    "sag",
    "temp_high",
    "temp_low",
    "humidity_high",
    "humidity_low",
    "co2_high",
)

# series name on the wire -> attribute on a telemetry record
METRIC_ATTRS = {
    "vrms": "v_rms",
    "irms": "i_rms",
    "power": "active_power",
    "temp": "temperature",
    "humidity": "humidity",
    "co2": "co2",
}

# kind -> advice text appended to alert bodies; data, not code.
TIP_TABLE = {
    "swell": "Voltage is above the swell threshold. Please check the power system.",
    "sag": "Voltage is below the sag threshold. Please check the power system.",
    "temp_high": "Air temperature is above the comfortable range. Consider cooling or shading the room.",
    "temp_low": "Air temperature is below the comfortable range. Consider heating the room.",
    "humidity_high": "Humidity is above the comfortable range. Ventilate or dehumidify the room.",
    "humidity_low": "Humidity is below the comfortable range. Consider using a humidifier.",
    "co2_high": "CO2 concentration is high. Ventilate the room to bring in fresh air.",
    "maintain": "All readings are within the acceptable range. Please maintain the current "
    "energy consumption and environmental condition.",
}


@dataclass(frozen=True)
class RuleSet:
    """Alerting thresholds and notification cadence.

    The comfort bands are engineering defaults, not measured constants;
    deployments are expected to tune them in the scenario/service config.
    """

    swell_threshold: float = 225.0
    sag_threshold: float = 219.0
    temp_band: tuple[float, float] = (18.0, 28.0)
    humidity_band: tuple[float, float] = (30.0, 70.0)
    co2_max: float = 1000.0
    alert_cooldown: float = 600.0
    summary_time: str = "00:00"
    maintain_window: float = 86400.0

    def __post_init__(self) -> None:
        if not self.sag_threshold < self.swell_threshold:
            raise ValueError("sag_threshold must be below swell_threshold")
        if not self.temp_band[0] < self.temp_band[1]:
            raise ValueError("temp_band must be (min, max) with min < max")
        if not self.humidity_band[0] < self.humidity_band[1]:
            raise ValueError("humidity_band must be (min, max) with min < max")
        if self.alert_cooldown < 0:
            raise ValueError("alert_cooldown must be >= 0")
        if self.maintain_window <= 0:
            raise ValueError("maintain_window must be > 0")
        _parse_time_of_day(self.summary_time)


def _parse_time_of_day(text: str) -> int:
    try:
        hh, mm = text.split(":")
        hours, minutes = int(hh), int(mm)
    except ValueError as exc:
        raise ValueError(f"summary_time must look like 'HH:MM', got {text!r}") from exc
    if not (0 <= hours < 24 and 0 <= minutes < 60):
        raise ValueError(f"summary_time out of range: {text!r}")
    return hours * 3600 + minutes * 60


def ruleset_from_dict(raw: dict) -> RuleSet:
    known = {
        "swell_threshold_v": "swell_threshold",
        "sag_threshold_v": "sag_threshold",
        "temp_band_c": "temp_band",
        "humidity_band_pct": "humidity_band",
        "co2_max_ppm": "co2_max",
        "alert_cooldown_s": "alert_cooldown",
        "summary_time": "summary_time",
        "maintain_window_s": "maintain_window",
    }
    unknown = set(raw) - set(known)
    if unknown:
        raise ValueError(f"unknown rules keys: {sorted(unknown)}")
    kwargs = {}
    for key, attr in known.items():
        if key in raw:
            value = raw[key]
            kwargs[attr] = tuple(value) if attr.endswith("_band") else value
    return RuleSet(**kwargs)


@dataclass(frozen=True)
class AnomalyEvent:
    device_id: str
    ts: int
    kind: str
    observed: float
    threshold: float


@dataclass(frozen=True)
class Notification:
    recipient: str
    created_ts: int
    subject: str
    body: str
    kind: str  # alert | maintain | daily_summary
    device_id: str

    def to_line(self) -> dict:
        return {
            "kind": self.kind,
            "device_id": self.device_id,
            "ts": self.created_ts,
            "subject": self.subject,
            "body": self.body,
            "recipient": self.recipient,
        }


@dataclass
class DailySummary:
    device_id: str
    date: str  # YYYY-MM-DD, UTC
    stats: dict  # metric -> {"min": x, "mean": x, "max": x}
    event_counts: dict  # kind -> count
    empty: bool = False


def evaluate(record, rules: RuleSet) -> list[AnomalyEvent]:
    """All rule violations on one record. Comparisons are strict: a reading
    sitting exactly on a threshold is not an anomaly."""
    events = []

    def hit(kind: str, observed: float, threshold: float) -> None:
        events.append(
            AnomalyEvent(
                device_id=record.device_id,
                ts=record.ts,
                kind=kind,
                observed=observed,
                threshold=threshold,
            )
        )

    if record.v_rms > rules.swell_threshold:
        hit("swell", record.v_rms, rules.swell_threshold)
    if record.v_rms < rules.sag_threshold:
        hit("sag", record.v_rms, rules.sag_threshold)
    if record.temperature > rules.temp_band[1]:
        hit("temp_high", record.temperature, rules.temp_band[1])
    if record.temperature < rules.temp_band[0]:
        hit("temp_low", record.temperature, rules.temp_band[0])
    if record.humidity > rules.humidity_band[1]:
        hit("humidity_high", record.humidity, rules.humidity_band[1])
    if record.humidity < rules.humidity_band[0]:
        hit("humidity_low", record.humidity, rules.humidity_band[0])
    if record.co2 > rules.co2_max:
        hit("co2_high", record.co2, rules.co2_max)
    return events


class Outbox:
    """Append-only notification sink: one JSON line per notification.

    A real mail transport can be plugged in as ``sink``; it must accept the
    same line dict. Failed writes stay in a pending buffer and are retried
    on the next append, so nothing is lost silently.
    """

    def __init__(self, path: Path | None = None, sink=None):
        self.path = Path(path) if path is not None else None
        self.sink = sink
        self.pending: list[Notification] = []
        self._memory: list[Notification] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._memory.append(_notification_from_line(json.loads(line)))

    def _write(self, notification: Notification) -> None:
        line = notification.to_line()
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(line, separators=(",", ":")) + "\n")
        if self.sink is not None:
            self.sink(line)

    def append(self, notification: Notification) -> None:
        with self._lock:
            queue = self.pending + [notification]
            self.pending = []
            for item in queue:
                try:
                    self._write(item)
                except OSError:
                    self.pending.append(item)
                    continue
                self._memory.append(item)

    def list_notifications(self, device_id=None, from_ts=None, to_ts=None) -> list[Notification]:
        with self._lock:
            items = list(self._memory)
        if device_id is not None:
            items = [n for n in items if n.device_id == device_id]
        if from_ts is not None:
            items = [n for n in items if n.created_ts >= from_ts]
        if to_ts is not None:
            items = [n for n in items if n.created_ts <= to_ts]
        return sorted(items, key=lambda n: n.created_ts)


def _notification_from_line(line: dict) -> Notification:
    return Notification(
        recipient=line.get("recipient", ""),
        created_ts=line["ts"],
        subject=line["subject"],
        body=line["body"],
        kind=line["kind"],
        device_id=line["device_id"],
    )


def _utc_date(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%d")


def _day_start(ts: int) -> int:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    midnight = dt.replace(hour=0, minute=0, second=0, microsecond=0)
    return int(midnight.timestamp())


def maintain_notice(
    device_id: str,
    recipient: str,
    window_end_ts: int,
    record_count: int,
    anomaly_count: int,
) -> Notification | None:
    """A 'keep it up' notice for a completed, anomaly-free, non-empty window."""
    if record_count == 0 or anomaly_count > 0:
        return None
    return Notification(
        recipient=recipient,
        created_ts=window_end_ts,
        subject=f"All readings normal for {device_id}",
        body=TIP_TABLE["maintain"],
        kind="maintain",
        device_id=device_id,
    )


@dataclass
class _DeviceRuleState:
    last_alert_ts: dict = field(default_factory=dict)  # kind -> ts
    suppressed: Counter = field(default_factory=Counter)
    alerted: Counter = field(default_factory=Counter)
    window_start: int | None = None
    window_records: int = 0
    window_events: int = 0
    open_day: str | None = None
    last_record_ts: int | None = None


class InsightEngine:
    """Consumes records in ingest order and writes notifications.

    Cooldown clocks, maintain windows and the open summary day are tracked
    per device; daily summary statistics are recomputed from the store so a
    restart cannot corrupt them.
    """

    def __init__(self, rules: RuleSet, outbox: Outbox, store=None, recipients=None):
        self.rules = rules
        self.outbox = outbox
        self.store = store
        self.recipients = recipients or {}
        self._devices: dict[str, _DeviceRuleState] = {}

    def _recipient(self, device_id: str) -> str:
        return self.recipients.get(device_id, "owner")

    def _track(self, device_id: str) -> _DeviceRuleState:
        return self._devices.setdefault(device_id, _DeviceRuleState())

    # -- alerts ---------------------------------------------------------

    def dispatch(self, events: list[AnomalyEvent], record) -> list[Notification]:
        """One alert per event kind, unless that kind is inside its cooldown."""
        track = self._track(record.device_id)
        sent = []
        for event in events:
            last = track.last_alert_ts.get(event.kind)
            if last is not None and event.ts - last < self.rules.alert_cooldown:
                track.suppressed[event.kind] += 1
                continue
            track.last_alert_ts[event.kind] = event.ts
            track.alerted[event.kind] += 1
            notification = Notification(
                recipient=self._recipient(event.device_id),
                created_ts=event.ts,
                subject=f"{event.kind} alert for {event.device_id}",
                body=(
                    f"Observed {event.observed:g} against threshold {event.threshold:g} "
                    f"at {event.ts}. {TIP_TABLE[event.kind]}"
                ),
                kind="alert",
                device_id=event.device_id,
            )
            self.outbox.append(notification)
            sent.append(notification)
        return sent

    # -- record intake ----------------------------------------------------

    def process(self, record) -> list[AnomalyEvent]:
        track = self._track(record.device_id)
        self._roll_windows(track, record.device_id, record.ts)
        events = evaluate(record, self.rules)
        self.dispatch(events, record)
        track.window_records += 1
        track.window_events += len(events)
        track.last_record_ts = record.ts
        return events

    def _roll_windows(self, track: _DeviceRuleState, device_id: str, ts: int) -> None:
        if track.window_start is None:
            track.window_start = ts
        while ts >= track.window_start + self.rules.maintain_window:
            self._close_window(track, device_id)
            track.window_start += int(self.rules.maintain_window)
        if track.open_day is None:
            track.open_day = _utc_date(ts)
        gate = _parse_time_of_day(self.rules.summary_time)
        while _utc_date(ts) > track.open_day and ts >= self._next_day_start(track.open_day) + gate:
            self._close_day(track, device_id)

    @staticmethod
    def _next_day_start(day: str) -> int:
        start = datetime.strptime(day, "%Y-%m-%d").replace(tzinfo=timezone.utc)
        return int(start.timestamp()) + 86400

    def _close_window(self, track: _DeviceRuleState, device_id: str) -> None:
        end = track.window_start + int(self.rules.maintain_window)
        notice = maintain_notice(
            device_id, self._recipient(device_id), end, track.window_records, track.window_events
        )
        if notice is not None:
            self.outbox.append(notice)
        track.window_records = 0
        track.window_events = 0

    def _close_day(self, track: _DeviceRuleState, device_id: str) -> None:
        day = track.open_day
        if day is None:
            return
        summary, notification = self.daily_summary(device_id, day)
        self.outbox.append(notification)
        track.open_day = _utc_date(self._next_day_start(day))

    # -- summaries --------------------------------------------------------

    def daily_summary(self, device_id: str, date: str) -> tuple[DailySummary, Notification]:
        """Min/mean/max per metric plus rule-event counts for one UTC date.

        Statistics and counts come from a fresh pass over the stored records,
        never from in-memory tallies.
        """
        start = int(datetime.strptime(date, "%Y-%m-%d").replace(tzinfo=timezone.utc).timestamp())
        end = start + 86400 - 1
        stored = self.store.scan(device_id, start, end) if self.store is not None else []
        records = [rec.to_telemetry() for rec in stored]
        counts = Counter()
        stats = {}
        if records:
            for rec in records:
                for event in evaluate(rec, self.rules):
                    counts[event.kind] += 1
            for metric, attr in METRIC_ATTRS.items():
                values = [getattr(rec, attr) for rec in records]
                stats[metric] = {
                    "min": min(values),
                    "mean": sum(values) / len(values),
                    "max": max(values),
                }
        summary = DailySummary(
            device_id=device_id,
            date=date,
            stats=stats,
            event_counts={kind: counts.get(kind, 0) for kind in EVENT_KINDS},
            empty=not records,
        )
        if summary.empty:
            body = f"No data recorded on {date}."
        else:
            lines = [
                f"{metric}: min {info['min']:g}, mean {info['mean']:.3f}, max {info['max']:g}"
                for metric, info in stats.items()
            ]
            events_line = ", ".join(f"{k}={v}" for k, v in summary.event_counts.items() if v) or "none"
            body = (
                f"Daily summary for {date}.\n" + "\n".join(lines) + f"\nRule events: {events_line}."
            )
        notification = Notification(
            recipient=self._recipient(device_id),
            created_ts=end,
            subject=f"Daily summary for {device_id} on {date}",
            body=body,
            kind="daily_summary",
            device_id=device_id,
        )
        return summary, notification

    def finalize(self) -> None:
        """Close every open maintain window and summary day (end of run)."""
        for device_id, track in self._devices.items():
            if track.window_start is not None and track.window_records > 0:
                end = (
                    track.last_record_ts + 1
                    if track.last_record_ts is not None
                    else track.window_start
                )
                notice = maintain_notice(
                    device_id,
                    self._recipient(device_id),
                    end,
                    track.window_records,
                    track.window_events,
                )
                if notice is not None:
                    self.outbox.append(notice)
                track.window_records = 0
                track.window_events = 0
            if track.open_day is not None:
                self._close_day(track, device_id)
                track.open_day = None

    def suppression_counts(self, device_id: str) -> dict:
        track = self._track(device_id)
        return dict(track.suppressed)

    def alert_counts(self, device_id: str) -> dict:
        track = self._track(device_id)
        return dict(track.alerted)
