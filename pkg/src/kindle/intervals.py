"""Disjunctions of closed integer intervals.

The abstract domain stores sets of integers as finite unions of closed
intervals with bounds in Z extended by +/- infinity.  The canonical form is
sorted, pairwise disjoint and non-adjacent ([1,2] and [3,4] collapse to
[1,4]); the empty union is bottom.  To keep states small, any union that
grows past ``MAX_DISJUNCTS`` intervals is collapsed to its hull.

Bounds are stored as ``int | None``: ``None`` means -infinity in the low
position and +infinity in the high position.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

MAX_DISJUNCTS = 16

Bound = Optional[int]
Pair = Tuple[Bound, Bound]


def _lo_key(lo: Bound) -> float:
    return float("-inf") if lo is None else lo


def _norm(pairs: Iterable[Pair]) -> Tuple[Pair, ...]:
    """Sort, drop empties, merge overlapping/adjacent intervals, cap size."""
    live = [(lo, hi) for lo, hi in pairs
            if lo is None or hi is None or lo <= hi]
    live.sort(key=lambda p: (_lo_key(p[0]), p[1] is None, p[1] or 0))
    merged: list[Pair] = []
    for lo, hi in live:
        if merged:
            plo, phi = merged[-1]
            # adjacency: [a,b] and [b+1,c] are one interval over Z
            if phi is None or (lo is not None and lo <= phi + 1):
                if phi is not None and (hi is None or hi > phi):
                    merged[-1] = (plo, hi)
                continue
        merged.append((lo, hi))
    if len(merged) > MAX_DISJUNCTS:
        merged = [(merged[0][0], merged[-1][1])]
    return tuple(merged)


@dataclass(frozen=True)
class IntervalSet:
    """A canonical finite union of closed integer intervals."""

    pairs: Tuple[Pair, ...] = ()

    @staticmethod
    def of(*pairs: Pair) -> "IntervalSet":
        return IntervalSet(_norm(pairs))

    @staticmethod
    def top() -> "IntervalSet":
        return _TOP

    @staticmethod
    def empty() -> "IntervalSet":
        return _EMPTY

    @staticmethod
    def point(n: int) -> "IntervalSet":
        return IntervalSet(((n, n),))

    @staticmethod
    def range(lo: Bound, hi: Bound) -> "IntervalSet":
        return IntervalSet.of((lo, hi))

    # -- structure ---------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.pairs

    @property
    def is_top(self) -> bool:
        return self.pairs == ((None, None),)

    @property
    def is_point(self) -> bool:
        return (len(self.pairs) == 1 and self.pairs[0][0] is not None
                and self.pairs[0][0] == self.pairs[0][1])

    def as_point(self) -> Optional[int]:
        return self.pairs[0][0] if self.is_point else None

    def min_bound(self) -> Bound:
        """Lowest value, None for -infinity. Undefined on empty."""
        return self.pairs[0][0]

    def max_bound(self) -> Bound:
        return self.pairs[-1][1]

    def hull(self) -> "IntervalSet":
        if self.is_empty:
            return self
        return IntervalSet(((self.pairs[0][0], self.pairs[-1][1]),))

    def contains(self, value: int) -> bool:
        for lo, hi in self.pairs:
            if (lo is None or value >= lo) and (hi is None or value <= hi):
                return True
        return False

    def covers(self, other: "IntervalSet") -> bool:
        """Set inclusion: other is a subset of self."""
        return other.union(self) == self

    def count_upto(self, limit: int) -> int:
        """Number of members, treating any unbounded side as > limit."""
        total = 0
        for lo, hi in self.pairs:
            if lo is None or hi is None:
                return limit + 1
            total += hi - lo + 1
            if total > limit:
                return limit + 1
        return total

    def iter_values(self) -> Iterable[int]:
        """Iterate members of a fully bounded set."""
        for lo, hi in self.pairs:
            if lo is None or hi is None:
                raise ValueError("cannot enumerate an unbounded interval set")
            yield from range(lo, hi + 1)

    # -- lattice -----------------------------------------------------------

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(_norm(self.pairs + other.pairs))

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out: list[Pair] = []
        for alo, ahi in self.pairs:
            for blo, bhi in other.pairs:
                lo = blo if alo is None else alo if blo is None else max(alo, blo)
                hi = bhi if ahi is None else ahi if bhi is None else min(ahi, bhi)
                if lo is None or hi is None or lo <= hi:
                    out.append((lo, hi))
        return IntervalSet(_norm(out))

    def widen(self, newer: "IntervalSet") -> "IntervalSet":
        """Classic interval widening on hulls: a bound that grew from self to
        newer is driven to infinity, a stable bound is kept."""
        if self.is_empty:
            return newer.hull()
        if newer.is_empty:
            return self.hull()
        olo, ohi = self.pairs[0][0], self.pairs[-1][1]
        nlo, nhi = newer.pairs[0][0], newer.pairs[-1][1]
        lo = olo if olo is not None and (nlo is not None and nlo >= olo) else None
        hi = ohi if ohi is not None and (nhi is not None and nhi <= ohi) else None
        return IntervalSet.of((lo, hi))

    # -- arithmetic --------------------------------------------------------

    def add(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for alo, ahi in self.pairs:
            for blo, bhi in other.pairs:
                lo = None if alo is None or blo is None else alo + blo
                hi = None if ahi is None or bhi is None else ahi + bhi
                out.append((lo, hi))
        return IntervalSet(_norm(out))

    def neg(self) -> "IntervalSet":
        return IntervalSet(_norm(
            (None if hi is None else -hi, None if lo is None else -lo)
            for lo, hi in self.pairs))

    def mul(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a in self.pairs:
            for b in other.pairs:
                out.append(_interval_mul(a, b))
        return IntervalSet(_norm(out))

    def tdiv(self, other: "IntervalSet") -> "IntervalSet":
        """Division truncating toward zero; top if the divisor may be 0."""
        if self.is_empty or other.is_empty:
            return _EMPTY
        if other.contains(0):
            return _TOP
        out = []
        for a in self.pairs:
            for b in other.pairs:
                out.append(_interval_tdiv(a, b))
        return IntervalSet(_norm(out))

    def emod(self, other: "IntervalSet") -> "IntervalSet":
        """Euclidean remainder: result in [0, |divisor|-1]."""
        if self.is_empty or other.is_empty:
            return _EMPTY
        if other.contains(0):
            return _TOP
        pa, pb = self.as_point(), other.as_point()
        if pa is not None and pb is not None:
            return IntervalSet.point(pa - pb * ediv_int(pa, pb))
        mags = [abs(b) for pair in other.pairs for b in pair if b is not None]
        unbounded = any(lo is None or hi is None for lo, hi in other.pairs)
        hi = None if unbounded else max(mags) - 1
        return IntervalSet.of((0, hi))

    def shl(self, other: "IntervalSet") -> "IntervalSet":
        s = other.as_point()
        if s is None or s < 0:
            return _TOP
        return self.mul(IntervalSet.point(2 ** s))

    def shr(self, other: "IntervalSet") -> "IntervalSet":
        """Arithmetic right shift = floor division by a power of two."""
        s = other.as_point()
        if s is None or s < 0:
            return _TOP
        d = 2 ** s
        return IntervalSet(_norm(
            (None if lo is None else lo // d, None if hi is None else hi // d)
            for lo, hi in self.pairs))

    def bitnot(self) -> "IntervalSet":
        # ~a == -a - 1 exactly
        return self.neg().add(IntervalSet.point(-1))

    def bitand(self, other: "IntervalSet") -> "IntervalSet":
        return self._bitpoint(other, lambda a, b: a & b)

    def bitor(self, other: "IntervalSet") -> "IntervalSet":
        return self._bitpoint(other, lambda a, b: a | b)

    def bitxor(self, other: "IntervalSet") -> "IntervalSet":
        return self._bitpoint(other, lambda a, b: a ^ b)

    def _bitpoint(self, other, op) -> "IntervalSet":
        if self.is_empty or other.is_empty:
            return _EMPTY
        a, b = self.as_point(), other.as_point()
        if a is not None and b is not None:
            return IntervalSet.point(op(a, b))
        return _TOP

    # -- truth values ------------------------------------------------------
    # Comparisons return the set of 0/1 outcomes over all member pairs.

    def eq_truth(self, other: "IntervalSet") -> "IntervalSet":
        if self.is_empty or other.is_empty:
            return _EMPTY
        if self.intersect(other).is_empty:
            return _FALSE
        if self.is_point and other.is_point and self == other:
            return _TRUE
        return _BOTH

    def lt_truth(self, other: "IntervalSet") -> "IntervalSet":
        if self.is_empty or other.is_empty:
            return _EMPTY
        amin, amax = self.min_bound(), self.max_bound()
        bmin, bmax = other.min_bound(), other.max_bound()
        if amax is not None and bmin is not None and amax < bmin:
            return _TRUE
        if amin is not None and bmax is not None and amin >= bmax:
            return _FALSE
        return _BOTH

    def truthiness(self) -> "IntervalSet":
        """C truth of the value: the 0/1 set of ``self != 0``."""
        if self.is_empty:
            return _EMPTY
        if not self.contains(0):
            return _TRUE
        if self == _ZERO:
            return _FALSE
        return _BOTH

    def not_truth(self) -> "IntervalSet":
        t = self.truthiness()
        if t.is_empty:
            return _EMPTY
        out = _EMPTY
        if t.contains(1):
            out = out.union(_FALSE)
        if t.contains(0):
            out = out.union(_TRUE)
        return out

    def __str__(self) -> str:
        if self.is_empty:
            return "{}"
        def b(x, inf):
            return inf if x is None else str(x)
        return " v ".join(f"[{b(lo, '-inf')},{b(hi, '+inf')}]"
                          for lo, hi in self.pairs)


def ediv_int(a: int, b: int) -> int:
    """Euclidean quotient: remainder is always in [0, |b|-1]."""
    q = a // b
    if a - b * q < 0:
        q += 1
    return q


def tdiv_int(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _interval_mul(a: Pair, b: Pair) -> Pair:
    INF = float("inf")
    alo = -INF if a[0] is None else a[0]
    ahi = INF if a[1] is None else a[1]
    blo = -INF if b[0] is None else b[0]
    bhi = INF if b[1] is None else b[1]

    def pmul(x, y):
        # 0 * inf contributes 0: the zero endpoint pins the product there.
        if x == 0 or y == 0:
            return 0
        if isinstance(x, float) or isinstance(y, float):
            return INF if (x > 0) == (y > 0) else -INF
        return x * y

    corners = [pmul(x, y) for x in (alo, ahi) for y in (blo, bhi)]
    lo, hi = min(corners), max(corners)
    return (None if lo == -INF else int(lo), None if hi == INF else int(hi))


def _interval_tdiv(a: Pair, b: Pair) -> Pair:
    # caller guarantees 0 is not in b, so b's members share one sign
    INF = float("inf")
    alo = -INF if a[0] is None else a[0]
    ahi = INF if a[1] is None else a[1]
    blo = -INF if b[0] is None else b[0]
    bhi = INF if b[1] is None else b[1]

    def pdiv(x, y):
        if isinstance(x, float):
            return INF if (x > 0) == (y > 0) else -INF
        if isinstance(y, float):
            return 0
        return tdiv_int(x, y)

    corners = [pdiv(x, y) for x in (alo, ahi) for y in (blo, bhi)]
    lo, hi = min(corners), max(corners)
    return (None if lo == -INF else int(lo), None if hi == INF else int(hi))


_TOP = IntervalSet(((None, None),))
_EMPTY = IntervalSet(())
_ZERO = IntervalSet(((0, 0),))
_TRUE = IntervalSet(((1, 1),))
_FALSE = IntervalSet(((0, 0),))
_BOTH = IntervalSet(((0, 1),))
