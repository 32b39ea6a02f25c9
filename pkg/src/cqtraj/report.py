"""Serializable check reports whose verdict can be recomputed from stored values."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

OPS = ("abs_diff_le", "le", "lt", "gt", "ratio_within", "true")


def condition(name: str, op: str, value, target=None, tol=None) -> dict:
    if op not in OPS:
        raise ValueError(f"unknown condition op {op!r}")
    return {"name": name, "op": op, "value": value, "target": target, "tol": tol}


def evaluate(cond: dict) -> bool:
    """Verdict of a single stored condition."""
    op, v, target, tol = cond["op"], cond["value"], cond["target"], cond["tol"]
    if op == "true":
        return bool(v)
    if v is None or not math.isfinite(v):
        return False
    if op == "abs_diff_le":
        return abs(v - target) <= tol
    if op == "le":
        return v <= tol
    if op == "lt":
        return v < target
    if op == "gt":
        return v > target
    return 1.0 / tol <= v / target <= tol


def _clean(obj):
    """Make a structure JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


@dataclass
class Report:
    """Outcome of one numerical claim.

    ``passed`` is ``None`` when there is nothing to check against.  When
    ``conditions`` is non-empty the verdict is their conjunction.
    """

    claim: str
    paper_value: float | None
    computed_value: float
    tolerance: float | None
    passed: bool | None = None
    grid_metadata: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    conditions: list = field(default_factory=list)

    def __post_init__(self):
        if self.conditions:
            self.passed = self.derive_pass()

    def derive_pass(self) -> bool:
        return all(evaluate(c) for c in self.conditions)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return _clean(d)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        d = dict(d)
        passed = d.pop("pass", None)
        conds = d.pop("conditions", [])
        r = cls(**d)
        r.conditions = conds
        r.passed = r.derive_pass() if conds else passed
        return r
