"""Operator entry point: run the service, run devices, validate, export."""

from __future__ import annotations

import csv
import json
import sys
import threading
import time
from pathlib import Path

import click
import httpx

from .device import DeviceRuntime
from .scenario import Scenario, build_sensor_suite, load_scenario
from .service.app import ServiceConfig, create_app
from .service.storage import METRICS, StoreLockedError
from .transport import (
    DeviceConfigRejected,
    FlakyTransport,
    HttpTransport,
    OfflineLog,
    RealClock,
    SimClock,
)
from .validation import max_error, render_table, rows_to_csv, run_validation

CONTEXT = {"auto_envvar_prefix": "WATTIQ", "help_option_names": ["-h", "--help"]}


@click.group(context_settings=CONTEXT)
def main():
    """Energy + indoor-environment monitoring twin."""


# ---------------------------------------------------------------- server ----


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Service YAML (storage dir, users, devices, rules).")
@click.option("--host", default=None, help="Override the config's bind host.")
@click.option("--port", type=int, default=None, help="Override the config's port.")
@click.option("--dashboard", type=click.Path(file_okay=False), default=None,
              help="Directory of built dashboard assets to serve at /.")
def server(config_path, host, port, dashboard):
    """Run the telemetry ingestion/query service until stopped."""
    import socket

    import uvicorn

    config = ServiceConfig.from_yaml(config_path)
    if host:
        config.host = host
    if port:
        config.port = port
    if dashboard:
        config.dashboard_dir = Path(dashboard)
    try:
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
            probe.bind((config.host, config.port))
    except OSError as exc:
        raise click.ClickException(f"cannot bind {config.host}:{config.port}: {exc}")
    try:
        app = create_app(config)
    except StoreLockedError as exc:
        raise click.ClickException(str(exc))
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    finally:
        app.state.store.close()


# ---------------------------------------------------------------- device ----


def _run_one_device(scenario: Scenario, index: int, endpoint: str, offline: bool,
                    mode: str, seed: int | None) -> dict:
    config = scenario.devices[index]
    suite, transport_rng = build_sensor_suite(scenario, index, seed)
    if mode == "fast":
        clock = SimClock(scenario.start_ts)
        start_ts = scenario.start_ts
    else:
        clock = RealClock()
        start_ts = int(time.time())
    transport = None
    offline_log = None
    if offline:
        offline_log = OfflineLog(Path(f"offline_{config.device_id}.jsonl"))
    else:
        client = httpx.Client(base_url=endpoint, timeout=10.0)
        transport = HttpTransport(client)
        if config.drop_probability > 0.0 or config.outages:
            outages = tuple((start_ts + a, start_ts + b) for a, b in config.outages)
            transport = FlakyTransport(
                inner=transport,
                clock=clock,
                rng=transport_rng,
                drop_probability=config.drop_probability,
                outages=outages,
            )
    runtime = DeviceRuntime(config, suite, transport, clock, start_ts)
    runtime.offline_log = offline_log
    counters = runtime.run(scenario.duration_s)
    if offline_log is not None:
        offline_log.close()
    return {
        "device_id": config.device_id,
        "produced": counters.produced,
        "acked": counters.acked,
        "dropped": counters.dropped,
        "queued": len(runtime.state.retry_queue),
        "sensor_faults": counters.sensor_faults,
        "connect_attempts": counters.connect_attempts,
        "offline_written": counters.offline_written,
    }


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--endpoint", default="http://127.0.0.1:8800", show_default=True)
@click.option("--offline", is_flag=True, help="Write records to a local log instead of posting.")
@click.option("--mode", type=click.Choice(["fast", "realtime"]), default="fast", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the run manifest JSON here instead of stdout.")
def device(scenario_path, endpoint, offline, mode, seed, out_path):
    """Run the scenario's simulated devices against the service."""
    scenario = load_scenario(scenario_path)
    if not scenario.devices:
        raise click.ClickException("scenario defines no devices")
    if not offline:
        try:
            probe = httpx.get(endpoint.rstrip("/") + "/api/v1/health", timeout=5.0)
            reachable = probe.status_code == 200
        except httpx.HTTPError as exc:
            raise click.ClickException(
                f"service at {endpoint} is unreachable ({exc}); use --offline to log locally"
            )
        if not reachable:
            raise click.ClickException(f"service at {endpoint} failed its health probe")

    results = [None] * len(scenario.devices)

    def run_index(i: int) -> None:
        try:
            results[i] = _run_one_device(scenario, i, endpoint, offline, mode, seed)
        except DeviceConfigRejected as exc:
            results[i] = {"device_id": scenario.devices[i].device_id, "error": str(exc)}

    if mode == "realtime" and len(scenario.devices) > 1:
        threads = [threading.Thread(target=run_index, args=(i,)) for i in range(len(scenario.devices))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    else:
        for i in range(len(scenario.devices)):
            run_index(i)

    manifest = {
        "scenario": scenario.name,
        "mode": mode,
        "seed": seed if seed is not None else scenario.seed,
        "start_ts": scenario.start_ts if mode == "fast" else None,
        "duration_s": scenario.duration_s,
        "devices": results,
    }
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)
    if any(r and "error" in r for r in results):
        raise click.ClickException("one or more devices were rejected by the service")


# -------------------------------------------------------------- validate ----


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--tolerance", type=float, default=1.0, show_default=True,
              help="Maximum acceptable percent error.")
@click.option("--ideal", is_flag=True,
              help="Zero-noise, infinite-resolution override (sanity baseline).")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the report as CSV.")
def validate(scenario_path, tolerance, ideal, seed, out_path):
    """Compare chain measurements against the scenario's reference values."""
    scenario = load_scenario(scenario_path)
    try:
        rows = run_validation(scenario, ideal=ideal, seed=seed)
    except Exception as exc:
        raise click.ClickException(str(exc))
    click.echo(render_table(rows))
    worst = max_error(rows)
    click.echo(f"\nworst error: {worst:.4f}% (tolerance {tolerance}%)")
    if out_path:
        Path(out_path).write_text(rows_to_csv(rows), encoding="utf-8")
    if worst > tolerance:
        raise click.ClickException(f"accuracy check failed: {worst:.4f}% > {tolerance}%")


# ---------------------------------------------------------------- report ----


@main.command()
@click.option("--endpoint", default="http://127.0.0.1:8800", show_default=True)
@click.option("--device", "device_id", required=True)
@click.option("--metric", type=click.Choice(METRICS), default=None,
              help="One metric; default exports all six.")
@click.option("--from", "from_ts", type=int, required=True, help="Range start (unix seconds).")
@click.option("--to", "to_ts", type=int, required=True, help="Range end (unix seconds).")
@click.option("--username", required=True)
@click.option("--password", required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", show_default=True)
def report(endpoint, device_id, metric, from_ts, to_ts, username, password, out_dir):
    """Export stored series as plot-ready CSV (ts,value per line)."""
    client = httpx.Client(base_url=endpoint, timeout=10.0)
    resp = client.post("/api/v1/login", json={"username": username, "password": password})
    if resp.status_code != 200:
        raise click.ClickException("login failed")
    token = resp.json()["token"]
    headers = {"Authorization": f"Bearer {token}"}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in [metric] if metric else list(METRICS):
        resp = client.get(
            "/api/v1/series",
            params={"device": device_id, "metric": name, "from": from_ts, "to": to_ts},
            headers=headers,
        )
        if resp.status_code != 200:
            raise click.ClickException(f"series query failed for {name}: {resp.status_code}")
        points = resp.json()["points"]
        path = out / f"{device_id}_{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["ts", "value"])
            for ts, value in points:
                writer.writerow([ts, repr(value) if isinstance(value, float) else value])
        if not points:
            click.echo(f"warning: no data for {name} in range; wrote header-only {path}", err=True)
        else:
            click.echo(f"wrote {len(points)} rows to {path}")


if __name__ == "__main__":
    main()
