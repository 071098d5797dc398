"""Intervals over the extended real line and their JSON encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class ExtInterval:
    """Closed interval ``[lo, hi]`` whose endpoints may be infinite.

    An empty interval carries no endpoints (both are NaN).
    """

    lo: float = -math.inf
    hi: float = math.inf
    empty: bool = False

    def __post_init__(self):
        if self.empty:
            object.__setattr__(self, "lo", math.nan)
            object.__setattr__(self, "hi", math.nan)
        elif not self.lo <= self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def make_empty(cls) -> ExtInterval:
        return cls(empty=True)

    @classmethod
    def real_line(cls) -> ExtInterval:
        return cls(-math.inf, math.inf)

    @classmethod
    def from_bounds(cls, lo: float, hi: float) -> ExtInterval:
        """Like the constructor, but ``lo > hi`` yields the empty interval."""
        lo, hi = float(lo), float(hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            return cls.make_empty()
        return cls(lo, hi)

    def __contains__(self, x: float) -> bool:
        return (not self.empty) and self.lo <= x <= self.hi

    def intersect(self, other: ExtInterval) -> ExtInterval:
        if self.empty or other.empty:
            return ExtInterval.make_empty()
        return ExtInterval.from_bounds(max(self.lo, other.lo), min(self.hi, other.hi))

    @property
    def width(self) -> float:
        if self.empty:
            return 0.0
        return self.hi - self.lo

    @property
    def bounded(self) -> bool:
        return (not self.empty) and math.isfinite(self.lo) and math.isfinite(self.hi)

    def to_json(self) -> dict[str, Any]:
        if self.empty:
            return {"empty": True}
        return {
            "lower": encode_float(self.lo),
            "upper": encode_float(self.hi),
            "empty": False,
        }


def encode_float(x: float) -> Any:
    """JSON-safe float: 17 significant digits, infinities as strings."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return float(f"{x:.17g}")


def decode_float(x: Any) -> float:
    if isinstance(x, str):
        return float(x)
    return float(x)


def interval_from_json(obj: dict[str, Any]) -> ExtInterval:
    if obj.get("empty"):
        return ExtInterval.make_empty()
    return ExtInterval(decode_float(obj["lower"]), decode_float(obj["upper"]))
