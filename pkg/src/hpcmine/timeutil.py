"""Timestamp helpers (UTC, second resolution)."""

from __future__ import annotations

from datetime import datetime, timezone

ISO_FORMAT = "%Y-%m-%dT%H:%M:%SZ"
BASIC_FORMAT = "%Y%m%dT%H%M%SZ"


def format_iso(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(ISO_FORMAT)


def parse_iso(value: str) -> datetime:
    return datetime.strptime(value, ISO_FORMAT).replace(tzinfo=timezone.utc)


def format_basic(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(BASIC_FORMAT)


def parse_basic(value: str) -> datetime:
    return datetime.strptime(value, BASIC_FORMAT).replace(tzinfo=timezone.utc)
