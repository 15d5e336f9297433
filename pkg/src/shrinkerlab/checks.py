"""The result record shared by every verification routine."""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

PASS, FAIL, RECORDED = "pass", "fail", "recorded"


def _plain(value):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def digest_inputs(inputs):
    text = json.dumps(_plain(inputs), sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class CheckReport:
    """One verified inequality or identity.

    ``margin`` is oriented so that nonnegative means the statement holds;
    ``strict`` checks fail when ``margin < -tolerance`` while the others
    only record their empirical constants.
    """

    check_id: str
    anchor: str
    lhs: float
    rhs: float
    margin: float
    strict: bool = True
    tolerance: float = 0.0
    constants: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    runtime: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def status(self):
        if not self.strict:
            return RECORDED
        return PASS if self.margin >= -self.tolerance else FAIL

    @property
    def passed(self):
        return self.status != FAIL

    @property
    def inputs_digest(self):
        return digest_inputs(self.inputs)

    def to_dict(self):
        return _plain({
            "id": self.check_id, "anchor": self.anchor, "inputs_digest": self.inputs_digest,
            "inputs": self.inputs, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
            "tolerance": self.tolerance, "constants": self.constants, "status": self.status,
            "strict": self.strict, "runtime": self.runtime, "notes": self.notes,
        })


def upper_check(check_id, anchor, lhs, rhs, tolerance, **kw):
    """Strict check of lhs <= rhs."""
    return CheckReport(check_id, anchor, float(lhs), float(rhs), float(rhs - lhs), True,
                       float(tolerance), **kw)


def identity_check(check_id, anchor, residual, tolerance, **kw):
    """Strict check that a residual vanishes: lhs = residual, rhs = 0."""
    return CheckReport(check_id, anchor, float(residual), 0.0, -abs(float(residual)), True,
                       float(tolerance), **kw)


def recorded(check_id, anchor, constants, lhs=float("nan"), rhs=float("nan"), **kw):
    """Non-asserting record of empirical constants."""
    return CheckReport(check_id, anchor, lhs, rhs, float("nan"), False, 0.0, dict(constants), **kw)


@contextmanager
def timed(reports):
    """Attach the elapsed wall time to every report appended inside the block."""
    start = time.perf_counter()
    first = len(reports)
    yield
    elapsed = time.perf_counter() - start
    for r in reports[first:]:
        r.runtime = elapsed


__all__ = ["CheckReport", "FAIL", "PASS", "RECORDED", "digest_inputs", "identity_check",
           "recorded", "timed", "upper_check"]
