"""Line-delimited event records shared by simulation traces and the live
session service.

Each event is a flat JSON object with at least `ts` (logical counter in
simulation, epoch milliseconds in the service) and `kind`; serialization is
key-sorted and separator-stable so identical event lists produce identical
bytes.
"""
from __future__ import annotations

import json
from typing import Iterable


def make_event(kind: str, ts, **fields) -> dict:
    event = {"ts": ts, "kind": kind}
    event.update(fields)
    return event


def event_line(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


def to_jsonl(events: Iterable[dict]) -> str:
    lines = [event_line(e) for e in events]
    return "\n".join(lines) + "\n" if lines else ""


def parse_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
