"""Exact finite unions of half-open intervals on the circle [0, 1).

Every set is a canonical tuple of pieces [lo, hi) with Fraction endpoints:
sorted, pairwise disjoint, never touching (hi_i < lo_{i+1}), and contained
in [0, 1].  Content crossing the seam at 0/1 is stored as two pieces; the
canonical form therefore never merges across the seam, which keeps
representations unique.  All operations are exact and return new values.

The half-open convention makes complement/union/measure exact partitions;
it differs from closed intervals only on finitely many points, which no
measure computed here can see.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction

from .errors import BudgetError
from .rationals import format_rational, parse_rational

_ZERO = Fraction(0)
_ONE = Fraction(1)

# Optional guard against runaway denominators.  None disables the check;
# operations never fall back to floating point, they refuse instead.
_denominator_budget: int | None = None


def set_denominator_budget(limit: int | None) -> int | None:
    """Set (or clear, with None) the global denominator budget. Returns the
    previous value."""
    global _denominator_budget
    previous = _denominator_budget
    _denominator_budget = limit
    return previous


def _check_budget(pieces) -> None:
    budget = _denominator_budget
    if budget is None:
        return
    for lo, hi in pieces:
        if lo.denominator > budget or hi.denominator > budget:
            raise BudgetError(
                f"denominator {max(lo.denominator, hi.denominator)} exceeds "
                f"the configured budget {budget}"
            )


def _coalesce_unit_spans(spans: list[tuple[Fraction, Fraction]]):
    """Sort spans already inside [0, 1] and merge overlaps/adjacencies."""
    spans.sort()
    merged: list[tuple[Fraction, Fraction]] = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return tuple(merged)


class TorusIntervalSet:
    """Canonical finite union of half-open rational intervals in [0, 1)."""

    __slots__ = ("pieces",)

    def __init__(self, pieces=()):
        """Build from arbitrary (lo, hi) pairs with lo < hi.

        Endpoints may lie anywhere on the real line; each piece is reduced
        mod 1 and split if it wraps.  Pieces of length >= 1 cover the whole
        circle.  Degenerate pieces (lo == hi) are dropped silently; lo > hi
        is an error.
        """
        spans: list[tuple[Fraction, Fraction]] = []
        full = False
        for raw_lo, raw_hi in pieces:
            lo = Fraction(raw_lo)
            hi = Fraction(raw_hi)
            if lo == hi:
                continue
            if lo > hi:
                raise ValueError(f"interval with lo > hi: [{lo}, {hi})")
            if hi - lo >= 1:
                full = True
                break
            base = lo - math.floor(lo)
            end = base + (hi - lo)
            if end <= 1:
                spans.append((base, end))
            else:
                spans.append((base, _ONE))
                spans.append((_ZERO, end - 1))
        if full:
            object.__setattr__(self, "pieces", ((_ZERO, _ONE),))
            return
        merged = _coalesce_unit_spans(spans)
        _check_budget(merged)
        object.__setattr__(self, "pieces", merged)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _trusted(cls, pieces: tuple) -> "TorusIntervalSet":
        """Wrap pieces already known to be canonical (internal fast path)."""
        obj = cls.__new__(cls)
        object.__setattr__(obj, "pieces", pieces)
        return obj

    @classmethod
    def from_unit_spans(cls, spans: list) -> "TorusIntervalSet":
        """Canonicalize spans that already lie inside [0, 1]."""
        merged = _coalesce_unit_spans(list(spans))
        _check_budget(merged)
        return cls._trusted(merged)

    @classmethod
    def empty(cls) -> "TorusIntervalSet":
        return cls._trusted(())

    @classmethod
    def full(cls) -> "TorusIntervalSet":
        return cls._trusted(((_ZERO, _ONE),))

    def __setattr__(self, name, value):
        raise AttributeError("TorusIntervalSet is immutable")

    # -- basic queries --------------------------------------------------------

    def measure(self) -> Fraction:
        """Exact Lebesgue measure: the sum of piece lengths."""
        total = _ZERO
        for lo, hi in self.pieces:
            total += hi - lo
        return total

    def is_empty(self) -> bool:
        return not self.pieces

    def contains(self, x) -> bool:
        """Point membership under the half-open convention, x taken mod 1."""
        point = Fraction(x)
        point -= math.floor(point)
        los = [lo for lo, _ in self.pieces]
        i = bisect_right(los, point) - 1
        return i >= 0 and point < self.pieces[i][1]

    # -- set algebra -----------------------------------------------------------

    def union(self, other: "TorusIntervalSet") -> "TorusIntervalSet":
        return TorusIntervalSet.from_unit_spans(
            list(self.pieces) + list(other.pieces)
        )

    def intersect(self, other: "TorusIntervalSet") -> "TorusIntervalSet":
        pa, pb = self.pieces, other.pieces
        out: list[tuple[Fraction, Fraction]] = []
        i = j = 0
        na, nb = len(pa), len(pb)
        while i < na and j < nb:
            alo, ahi = pa[i]
            blo, bhi = pb[j]
            lo = alo if alo > blo else blo
            if ahi <= bhi:
                hi = ahi
                i += 1
            else:
                hi = bhi
                j += 1
            if hi > lo:
                out.append((lo, hi))
        # Intersecting two canonical sets cannot create touching pieces.
        result = tuple(out)
        _check_budget(result)
        return TorusIntervalSet._trusted(result)

    def complement(self) -> "TorusIntervalSet":
        out: list[tuple[Fraction, Fraction]] = []
        cursor = _ZERO
        for lo, hi in self.pieces:
            if lo > cursor:
                out.append((cursor, lo))
            cursor = hi
        if cursor < 1:
            out.append((cursor, _ONE))
        return TorusIntervalSet._trusted(tuple(out))

    def minus(self, other: "TorusIntervalSet") -> "TorusIntervalSet":
        return self.intersect(other.complement())

    def translate(self, t) -> "TorusIntervalSet":
        """Rotate by t (mod 1).  Measure preserving."""
        shift = Fraction(t)
        shift -= math.floor(shift)
        if shift == 0:
            return self
        spans: list[tuple[Fraction, Fraction]] = []
        for lo, hi in self.pieces:
            nlo = lo + shift
            nhi = hi + shift
            if nhi <= 1:
                spans.append((nlo, nhi))
            elif nlo >= 1:
                spans.append((nlo - 1, nhi - 1))
            else:
                spans.append((nlo, _ONE))
                spans.append((_ZERO, nhi - 1))
        return TorusIntervalSet.from_unit_spans(spans)

    def restrict(self, lo, hi) -> "TorusIntervalSet":
        """Intersection with the window [lo, hi), 0 <= lo < hi <= 1."""
        lo = Fraction(lo)
        hi = Fraction(hi)
        if not (0 <= lo < hi <= 1):
            raise ValueError("restrict window must satisfy 0 <= lo < hi <= 1")
        return self.intersect(TorusIntervalSet._trusted(((lo, hi),)))

    def is_subset_of(self, other: "TorusIntervalSet") -> bool:
        """Exact containment of point sets (not just almost-everywhere)."""
        other_los = [lo for lo, _ in other.pieces]
        for lo, hi in self.pieces:
            i = bisect_right(other_los, lo) - 1
            # Pieces of `other` are separated by real gaps, so [lo, hi) must
            # sit inside a single one of them.
            if i < 0 or hi > other.pieces[i][1]:
                return False
        return True

    # -- serialization ----------------------------------------------------------

    def to_pairs(self) -> list[list[str]]:
        """JSON-ready form: a list of ["p/q", "p/q"] endpoint pairs."""
        return [[format_rational(lo), format_rational(hi)] for lo, hi in self.pieces]

    @classmethod
    def from_pairs(cls, pairs) -> "TorusIntervalSet":
        """Inverse of to_pairs.  Input must already be canonical; round trips
        are bit-exact."""
        pieces = tuple(
            (parse_rational(lo), parse_rational(hi)) for lo, hi in pairs
        )
        previous_hi = None
        for lo, hi in pieces:
            if not (0 <= lo < hi <= 1):
                raise ValueError("piece endpoints outside the canonical range")
            if previous_hi is not None and lo <= previous_hi:
                raise ValueError("pieces not in canonical order")
            previous_hi = hi
        _check_budget(pieces)
        return cls._trusted(pieces)

    # -- dunder plumbing ---------------------------------------------------------

    def __reduce__(self):
        return (TorusIntervalSet._trusted, (self.pieces,))

    def __eq__(self, other):
        if not isinstance(other, TorusIntervalSet):
            return NotImplemented
        return self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __len__(self):
        return len(self.pieces)

    def __repr__(self):
        inner = ", ".join(f"[{lo}, {hi})" for lo, hi in self.pieces)
        return f"TorusIntervalSet({{{inner}}})"


def measure_intersection(a: TorusIntervalSet, b: TorusIntervalSet) -> Fraction:
    """Measure of a.intersect(b) without building the set; used in hot loops."""
    pa, pb = a.pieces, b.pieces
    total = _ZERO
    i = j = 0
    na, nb = len(pa), len(pb)
    while i < na and j < nb:
        alo, ahi = pa[i]
        blo, bhi = pb[j]
        lo = alo if alo > blo else blo
        if ahi <= bhi:
            hi = ahi
            i += 1
        else:
            hi = bhi
            j += 1
        if hi > lo:
            total += hi - lo
    return total
