"""Deterministic JSON reports."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
from typing import Any

from . import __version__
from .checks import Check, Status

TOOL = "edskit"
SCHEMA_VERSION = 1


def _clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Status):
        return obj.value
    if isinstance(obj, Check):
        return obj.to_dict()
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _clean(obj.item())
    return obj


def build_report(command: str, status: Status, input_digest: str, input_path: str, seed: int,
                 body: dict, checks: list[Check] | None = None, timestamp: str | None = None) -> dict:
    checks = checks or []
    certs = sorted({c.certification for c in checks})
    report = {
        "tool": TOOL,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "input": {"path": input_path, "sha256": input_digest},
        "seed": seed,
        "status": status.value,
        "certification_modes": certs,
        "checks": [c.to_dict() for c in checks],
        **body,
    }
    report = _clean(report)
    report["timestamp"] = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    report["digest"] = report_digest(report)
    return report


def report_digest(report: dict) -> str:
    """sha256 of the canonical report without its timestamp and digest."""
    core = {k: v for k, v in report.items() if k not in ("timestamp", "digest")}
    return hashlib.sha256(dumps(core).encode("utf-8")).hexdigest()


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
