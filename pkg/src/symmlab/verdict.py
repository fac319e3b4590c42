"""Pass/fail records for a single checked inequality."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED"
MARGINAL = "MARGINAL"
INCONCLUSIVE = "INCONCLUSIVE"
INCOMPLETE = "INCOMPLETE"

STATUSES = (PASS, FAIL, SKIPPED, MARGINAL, INCONCLUSIVE, INCOMPLETE)
OK_STATUSES = (PASS, SKIPPED)


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


@dataclass(frozen=True)
class Verdict:
    """Outcome of comparing ``lhs`` against ``rhs`` under ``relation``.

    ``margin`` is signed: positive means the inequality holds with room to spare
    (``rhs - lhs`` for ``<=``, ``lhs - rhs`` for ``>=``), tolerance excluded.
    """

    name: str
    status: str
    relation: str = ""
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    tol: Optional[float] = None
    margin: Optional[float] = None
    reason: Optional[str] = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown verdict status {self.status!r}")

    @property
    def ok(self):
        return self.status in OK_STATUSES

    def to_dict(self):
        out = {"name": self.name, "status": self.status, "relation": self.relation}
        for key in ("lhs", "rhs", "tol", "margin"):
            out[key] = _clean(getattr(self, key))
        out["reason"] = self.reason
        out["detail"] = {k: _clean(v) for k, v in sorted(self.detail.items())}
        return out

    def line(self):
        parts = [f"{self.name}: {self.status}"]
        if self.lhs is not None and self.rhs is not None:
            parts.append(f"{self.lhs:.6g} {self.relation} {self.rhs:.6g}")
        if self.tol is not None:
            parts.append(f"tol={self.tol:.3g}")
        if self.reason:
            parts.append(f"({self.reason})")
        return "  ".join(parts)


def compare(name, lhs, relation, rhs, tol=0.0, noise=0.0, detail=None):
    """Build a verdict for ``lhs <= rhs + tol`` or ``lhs >= rhs - tol``.

    A holding inequality whose margin is below ``noise`` becomes MARGINAL.
    """
    if relation == "<=":
        margin = rhs - lhs
    elif relation == ">=":
        margin = lhs - rhs
    else:
        raise ValueError(f"relation must be '<=' or '>=', got {relation!r}")
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        status = FAIL
    elif margin + tol >= 0:
        status = MARGINAL if (noise > 0 and margin < noise) else PASS
    else:
        status = FAIL
    return Verdict(name, status, relation, float(lhs), float(rhs), float(tol), float(margin),
                   detail=dict(detail or {}))
