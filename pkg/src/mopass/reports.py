"""Report records shared by the hypothesis checkers and the CLI."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class HypothesisError(ValueError):
    """A structural hypothesis is violated and no override was given.

    Attributes
    ----------
    bound : str
        Name of the violated bound (e.g. ``"alpha_upper"``).
    value, limit : float
        The offending value and the limit it crosses.
    """

    def __init__(self, message: str, bound: str, value: float, limit: float):
        super().__init__(message)
        self.bound = bound
        self.value = value
        self.limit = limit


class HypothesisWarning(UserWarning):
    """Emitted instead of :class:`HypothesisError` when an override is active."""


class NumericError(RuntimeError):
    """A root-finder or iteration failed to converge."""


class InputError(ValueError):
    """Arguments outside an operation's domain (negative t, x outside the box, grid mismatch)."""


def _jsonable(value: Any) -> Any:
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            return repr(v)
        return v
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class CheckReport:
    """Outcome of one sampled hypothesis check.

    ``constant`` is the smallest constant consistent with every sample,
    ``margin`` the worst signed slack (negative means violated) and
    ``worst_point`` the sample attaining it.  Sampled checks are diagnostics:
    a pass means no violation was found on the sampled range.
    """

    check: str
    passed: bool
    constant: float = float("nan")
    worst_point: Any = None
    margin: float = float("nan")
    message: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable({
            "check": self.check,
            "pass": bool(self.passed),
            "constant": self.constant,
            "worst_point": self.worst_point,
            "margin": self.margin,
            "message": self.message,
            **({"details": self.details} if self.details else {}),
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            if hasattr(rec, "to_dict"):
                rec = rec.to_dict()
            fh.write(json.dumps(_jsonable(rec)) + "\n")


def to_jsonable(value: Any) -> Any:
    return _jsonable(value)
