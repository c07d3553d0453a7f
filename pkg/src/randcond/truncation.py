"""Truncation sets: finite unions of disjoint open intervals.

A truncation set encodes the model-selection event; every conditional
law downstream is parameterized by one. Construction canonicalizes
(sorts, merges overlapping or endpoint-sharing intervals) so that k is
minimal and the distribution formulas see no spurious near-zero terms.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TruncationSet",
    "make_truncation_set",
    "parse_truncation_set",
    "format_truncation_set",
    "REAL_LINE",
]


@dataclass(frozen=True)
class TruncationSet:
    """Ordered disjoint union of open intervals (a_1,b_1), ..., (a_k,b_k).

    Invariants: a_1 < b_1 < a_2 < ... < a_k < b_k, only a_1 may be -inf,
    only b_k may be +inf, k >= 1. Build through make_truncation_set.
    """

    intervals: tuple[tuple[float, float], ...]

    @property
    def k(self) -> int:
        return len(self.intervals)

    @property
    def lower_endpoints(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals])

    @property
    def upper_endpoints(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals])

    def contains(self, v: float) -> bool:
        """True iff v lies strictly inside some interval."""
        return any(a < v < b for a, b in self.intervals)

    def bounded_above(self) -> bool:
        return self.intervals[-1][1] < math.inf

    def bounded_below(self) -> bool:
        return self.intervals[0][0] > -math.inf

    def reflected(self) -> "TruncationSet":
        """The set -T (negated endpoints, order reversed)."""
        return TruncationSet(tuple((-b, -a) for a, b in reversed(self.intervals)))

    def shifted(self, c: float) -> "TruncationSet":
        return TruncationSet(tuple((a + c, b + c) for a, b in self.intervals))

    def scaled(self, c: float) -> "TruncationSet":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return TruncationSet(tuple((a * c, b * c) for a, b in self.intervals))

    def __str__(self) -> str:
        return format_truncation_set(self)


def make_truncation_set(raw) -> TruncationSet:
    """Canonical TruncationSet from endpoint pairs.

    Sorts, merges overlapping or adjacent intervals (a shared endpoint is
    a measure-zero distinction), and validates the invariants. Raises
    ValueError on an empty list or any pair with a >= b.
    """
    pairs = [(float(a), float(b)) for a, b in raw]
    if not pairs:
        raise ValueError("truncation set needs at least one interval")
    for a, b in pairs:
        if math.isnan(a) or math.isnan(b):
            raise ValueError(f"invalid interval endpoints ({a}, {b})")
        if not a < b:
            raise ValueError(f"interval ({a}, {b}) is empty: need a < b")
    pairs.sort()
    merged = [pairs[0]]
    for a, b in pairs[1:]:
        la, lb = merged[-1]
        if a <= lb:
            merged[-1] = (la, max(lb, b))
        else:
            merged.append((a, b))
    for i, (a, b) in enumerate(merged):
        if a == -math.inf and i > 0:
            raise ValueError("only the first interval may extend to -inf")
        if b == math.inf and i < len(merged) - 1:
            raise ValueError("only the last interval may extend to +inf")
    return TruncationSet(tuple(merged))


REAL_LINE = make_truncation_set([(-math.inf, math.inf)])

_NUM = r"[^,()]+"
_INTERVAL_RE = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*\)")


def parse_truncation_set(text: str) -> TruncationSet:
    """Parse the CLI text form, e.g. "(-inf,-2),(2,inf)"."""
    stripped = text.strip()
    if not stripped:
        raise ValueError("empty truncation-set string")
    pairs = []
    pos = 0
    for m in _INTERVAL_RE.finditer(stripped):
        between = stripped[pos:m.start()].strip()
        if between not in ("", ","):
            raise ValueError(f"cannot parse truncation set near {between!r}")
        try:
            pairs.append((float(m.group(1)), float(m.group(2))))
        except ValueError as exc:
            raise ValueError(f"bad interval endpoint in {m.group(0)!r}") from exc
        pos = m.end()
    if stripped[pos:].strip() not in ("",):
        raise ValueError(f"cannot parse truncation set near {stripped[pos:]!r}")
    if not pairs:
        raise ValueError(f"no intervals found in {text!r}")
    return make_truncation_set(pairs)


def _fmt_endpoint(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return repr(x)


def format_truncation_set(T: TruncationSet) -> str:
    """Text form that round-trips through parse_truncation_set."""
    return ",".join(f"({_fmt_endpoint(a)},{_fmt_endpoint(b)})" for a, b in T.intervals)
