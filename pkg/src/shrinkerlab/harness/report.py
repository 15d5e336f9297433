"""Report assembly, canonical digest and schema validation."""

from __future__ import annotations

import hashlib
import json
import math
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from ..checks import FAIL, PASS, RECORDED, _plain
from ..errors import ConfigError

SCHEMA_VERSION = "1.0"
VOLATILE_KEYS = ("timestamps", "runtime", "digest")


def load_schema():
    text = resources.files("shrinkerlab.harness").joinpath("report.schema.json").read_text()
    return json.loads(text)


def _canonical(value):
    """Nested copy with floats as fixed-format strings and volatile keys removed."""
    if isinstance(value, dict):
        return {k: _canonical(v) for k, v in value.items() if k not in VOLATILE_KEYS}
    if isinstance(value, list):
        return [_canonical(v) for v in value]
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return "%.12e" % value
    return value


def report_digest(report):
    """SHA-256 over the canonical JSON of the report (timestamps and runtimes excluded)."""
    text = json.dumps(_canonical(_plain(report)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def summarize(checks):
    counts = {PASS: 0, FAIL: 0, RECORDED: 0}
    for c in checks:
        counts[c["status"]] += 1
    return {"total": len(checks), "pass": counts[PASS], "fail": counts[FAIL],
            "recorded": counts[RECORDED], "ok": counts[FAIL] == 0}


def build_report(config, models, entries, notes=(), started=None):
    """Assemble the report dict from (suite, model_name, CheckReport) entries."""
    from .. import __version__

    checks = []
    for suite, model_name, rep in entries:
        d = rep.to_dict()
        d["suite"] = suite
        d["model"] = model_name
        checks.append(d)
    now = datetime.now(timezone.utc).isoformat()
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "shrinkerlab", "version": __version__},
        "config": config.to_dict(),
        "models": [m.to_dict() for m in models],
        "checks": checks,
        "summary": summarize(checks),
        "notes": list(notes),
        "timestamps": {"started": started or now, "finished": now},
    }
    report = _plain(report)
    report["digest"] = report_digest(report)
    return report


def validate_report(report):
    """Raise ``jsonschema.ValidationError`` if the report does not match the schema."""
    import jsonschema

    jsonschema.validate(report, load_schema())


def write_report(report, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write report to {path}: {exc.strerror}") from exc
    return path


__all__ = ["SCHEMA_VERSION", "build_report", "load_schema", "report_digest", "summarize",
           "validate_report", "write_report"]
