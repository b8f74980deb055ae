"""Finite disjoint unions of bounded open real intervals."""

from __future__ import annotations

import json
import math
from typing import Iterable, Iterator, Sequence


class IntervalSetError(ValueError):
    pass


class IntervalSet:
    """Sorted, pairwise-disjoint union of open intervals ``(left, right)``.

    Touching intervals such as ``(0, 1)`` and ``(1, 2)`` are allowed; the
    shared endpoint is not a member of the set and is a boundary point.
    """

    __slots__ = ("_intervals",)

    def __init__(self, intervals: Iterable[Sequence[float]] = ()):
        items = sorted((float(a), float(b)) for a, b in intervals)
        for a, b in items:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise IntervalSetError(f"interval ({a}, {b}) is not bounded")
            if not a < b:
                raise IntervalSetError(f"interval ({a}, {b}) has left >= right")
        for (_, b0), (a1, _) in zip(items, items[1:]):
            if a1 < b0:
                raise IntervalSetError(f"intervals overlap near {a1}")
        self._intervals = tuple(items)

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        return self._intervals

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self._intervals)

    def __len__(self) -> int:
        return len(self._intervals)

    def __bool__(self) -> bool:
        return bool(self._intervals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self._intervals == other._intervals

    def __hash__(self) -> int:
        return hash(self._intervals)

    def __repr__(self) -> str:
        return f"IntervalSet({list(self._intervals)!r})"

    @property
    def measure(self) -> float:
        return math.fsum(b - a for a, b in self._intervals)

    @property
    def lefts(self) -> list[float]:
        return [a for a, _ in self._intervals]

    @property
    def rights(self) -> list[float]:
        return [b for _, b in self._intervals]

    def boundary(self) -> list[float]:
        """Endpoints of all components, sorted, duplicates removed."""
        pts = sorted({p for ab in self._intervals for p in ab})
        return pts

    def contains(self, x: float) -> bool:
        return any(a < x < b for a, b in self._intervals)

    def on_boundary(self, x: float) -> bool:
        return any(x == a or x == b for a, b in self._intervals)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        """Union of two disjoint sets (overlap raises)."""
        return IntervalSet(self._intervals + other._intervals)

    def remove(self, left: float, right: float) -> "IntervalSet":
        """Delete the closed interval ``[left, right]`` from the set."""
        out = []
        for a, b in self._intervals:
            if b <= left or a >= right:
                out.append((a, b))
                continue
            if a < left:
                out.append((a, left))
            if right < b:
                out.append((right, b))
        return IntervalSet(out)

    def clip(self, left: float, right: float) -> "IntervalSet":
        """Intersection with the open interval ``(left, right)``."""
        out = []
        for a, b in self._intervals:
            lo, hi = max(a, left), min(b, right)
            if lo < hi:
                out.append((lo, hi))
        return IntervalSet(out)

    def measure_in(self, left: float, right: float) -> float:
        return self.clip(left, right).measure

    def max_window_measure(self, width: float) -> float:
        """Largest measure of the set inside any window of the given width.

        The window measure is piecewise linear in the window position, so the
        maximum sits where a window edge meets an interval endpoint.
        """
        if not self._intervals:
            return 0.0
        starts = set()
        for a, b in self._intervals:
            starts.update((a, b, a - width, b - width))
        return max(self.measure_in(t, t + width) for t in starts)

    def scale_translate(self, scale: float, shift: float) -> "IntervalSet":
        if not scale > 0:
            raise IntervalSetError(f"scale must be positive, got {scale}")
        return IntervalSet((scale * a + shift, scale * b + shift) for a, b in self._intervals)

    def to_json(self) -> str:
        return json.dumps([[a, b] for a, b in self._intervals])

    @classmethod
    def from_json(cls, text: str) -> "IntervalSet":
        data = json.loads(text)
        if not isinstance(data, list):
            raise IntervalSetError("expected a JSON array of [left, right] pairs")
        pairs = []
        for item in data:
            if not (isinstance(item, list) and len(item) == 2):
                raise IntervalSetError(f"bad interval entry {item!r}")
            pairs.append((item[0], item[1]))
        out = cls(pairs)
        if [list(p) for p in out.intervals] != [[float(a), float(b)] for a, b in pairs]:
            raise IntervalSetError("intervals must be sorted and strictly increasing")
        return out
