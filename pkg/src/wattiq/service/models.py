"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class TelemetryIn(BaseModel):
    """Wire format of one telemetry record (field order drives 400 reporting)."""

    model_config = ConfigDict(extra="forbid")

    device_id: str = Field(min_length=1, max_length=64)
    api_key: str = Field(min_length=1)
    ts: int
    vrms: float = Field(allow_inf_nan=False)
    irms: float = Field(allow_inf_nan=False)
    power: float = Field(allow_inf_nan=False)
    temp: float = Field(allow_inf_nan=False)
    humidity: float = Field(allow_inf_nan=False)
    co2: int
    suspect: bool


class IngestOk(BaseModel):
    ok: bool = True


class LoginIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    username: str
    password: str


class LoginOut(BaseModel):
    token: str
    expires: int


class SeriesOut(BaseModel):
    points: list[tuple[int, float]]


class NotificationOut(BaseModel):
    kind: str
    device_id: str
    ts: int
    subject: str
    body: str
    recipient: str


class NotificationsOut(BaseModel):
    notifications: list[NotificationOut]


class RulesOut(BaseModel):
    swell_threshold_v: float
    sag_threshold_v: float
    temp_band_c: tuple[float, float]
    humidity_band_pct: tuple[float, float]
    co2_max_ppm: float
    alert_cooldown_s: float
