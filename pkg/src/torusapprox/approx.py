"""Coprime approximation sets on the circle.

For a denominator q, a weight value psi_q and a target shift y_q, the
approximation set is the union over residues a coprime to q of the
half-open intervals

    [ (a + y_q)/q - psi_q/q ,  (a + y_q)/q + psi_q/q )      (mod 1).

When psi_q <= 1/2 these intervals are pairwise disjoint and the measure is
exactly 2 * phi(q) * psi_q / q.  This module builds the sets exactly, holds
the reduced-residue point sets and their mod-1 sumsets, and provides the
weight/target families used by the experiment drivers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .arith import totient
from .rationals import parse_rational
from .torus import TorusIntervalSet

_ZERO = Fraction(0)
_HALF = Fraction(1, 2)


def coprime_residues(q: int) -> list[int]:
    """Residues 0 <= a < q with gcd(a, q) = 1; [0] when q = 1."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if q == 1:
        return [0]
    return [a for a in range(1, q) if math.gcd(a, q) == 1]


@dataclass(frozen=True)
class ReducedResidues:
    """The phi(q) reduced fractions a/q on the circle, sorted."""

    q: int
    points: tuple[Fraction, ...]

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def reduced_fractions(q: int) -> ReducedResidues:
    points = tuple(Fraction(a, q) for a in coprime_residues(q))
    return ReducedResidues(q=q, points=points)


def sumset_reduced(r: int, s: int) -> tuple[Fraction, ...]:
    """Mod-1 sumset of the reduced fractions with denominators r and s.

    Requires gcd(r, s) = 1.  The Chinese remainder theorem makes
    a/r + b/s  (mod 1) a bijection onto the reduced fractions with
    denominator r*s, so the result always has phi(r) * phi(s) points.
    """
    if r < 1 or s < 1:
        raise ValueError("denominators must be >= 1")
    if math.gcd(r, s) != 1:
        raise ValueError(f"sumset_reduced requires coprime inputs, got {r}, {s}")
    rs = r * s
    numerators = sorted(
        (a * s + b * r) % rs
        for a in coprime_residues(r)
        for b in coprime_residues(s)
    )
    return tuple(Fraction(c, rs) for c in numerators)


def build_approx_set(q: int, psi_q, y_q) -> TorusIntervalSet:
    """The exact approximation set for one denominator.

    Empty when psi_q = 0; the full circle once the interval length 2*psi_q/q
    reaches 1.  All endpoints are exact rationals.

    Every endpoint is (a + y +- psi)/q, so the whole construction runs on
    integer numerators over the common denominator q * den(y) * den(psi);
    fractions only appear in the final canonical pieces.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    psi = Fraction(psi_q)
    if psi < 0:
        raise ValueError("psi must be non-negative")
    if psi == 0:
        return TorusIntervalSet.empty()
    y = Fraction(y_q)
    if 2 * psi.numerator >= psi.denominator * q:  # interval length reaches 1
        return TorusIntervalSet.full()
    scale = y.denominator * psi.denominator
    den = q * scale
    base = y.numerator * psi.denominator
    radius = psi.numerator * y.denominator
    length = 2 * radius  # < den by the full-circle check above
    spans: list[tuple[int, int]] = []
    for a in coprime_residues(q):
        lo = (a * scale + base - radius) % den
        hi = lo + length
        if hi <= den:
            spans.append((lo, hi))
        else:
            spans.append((lo, den))
            spans.append((0, hi - den))
    spans.sort()
    merged: list[list[int]] = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    pieces = tuple((Fraction(lo, den), Fraction(hi, den)) for lo, hi in merged)
    return TorusIntervalSet._trusted(pieces)


class MeasureCheck(NamedTuple):
    measure: Fraction
    closed_form: Fraction  # 2 * phi(q) * psi / q
    ok: bool


def approx_set_measure(q: int, psi_q, y_q) -> MeasureCheck:
    """Exact measure together with the closed-form consistency flag.

    ok asserts measure == 2*phi(q)*psi/q whenever psi <= 1/2, and
    measure <= min(1, closed form) in every case.
    """
    psi = Fraction(psi_q)
    measure = build_approx_set(q, psi, y_q).measure()
    closed = 2 * Fraction(totient(q) * psi, q)
    ok = measure <= min(Fraction(1), closed)
    if psi <= _HALF:
        ok = ok and measure == closed
    return MeasureCheck(measure=measure, closed_form=closed, ok=ok)


def product_measure(measure_1d, m: int) -> Fraction:
    """m-dimensional product measure from per-coordinate 1-d measures.

    A single rational is raised to the m-th power; a sequence must have
    exactly m entries (one per coordinate) and is multiplied out.
    """
    if m < 1:
        raise ValueError("dimension must be >= 1")
    if isinstance(measure_1d, (list, tuple)):
        if len(measure_1d) != m:
            raise ValueError(
                f"dimension mismatch: {len(measure_1d)} coordinate measures for m={m}"
            )
        out = Fraction(1)
        for value in measure_1d:
            out *= Fraction(value)
        return out
    return Fraction(measure_1d) ** m


def equidistribution_ratio(q: int, psi_q, y_q, lo, hi) -> Fraction:
    """measure(A intersect [lo, hi)) / measure(A), exact.

    Errors out when the set is empty (ratio undefined).
    """
    lo = Fraction(lo)
    hi = Fraction(hi)
    if not (0 <= lo < hi <= 1):
        raise ValueError("window must satisfy 0 <= lo < hi <= 1")
    approx = build_approx_set(q, psi_q, y_q)
    total = approx.measure()
    if total == 0:
        raise ValueError("equidistribution ratio undefined for an empty set")
    return approx.restrict(lo, hi).measure() / total


def hit_test(x, q: int, psi_q, y_q) -> bool:
    """Whether |q*x - a - y_q| < psi_q holds for some a coprime to q.

    Only the three integers nearest q*x - y_q can qualify.  Exact when x is
    a rational; a float x stays in float arithmetic (the Monte Carlo path).
    The strict inequality differs from the half-open set exactly on interval
    endpoints, a measure-zero discrepancy.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if isinstance(x, float):
        psi = float(psi_q)
        if psi == 0.0:
            return False
        t = q * x - float(y_q)
        base = math.floor(t + 0.5)
        for a in (base - 1, base, base + 1):
            if abs(t - a) < psi and math.gcd(abs(a), q) == 1:
                return True
        return False
    psi = Fraction(psi_q)
    if psi == 0:
        return False
    t = q * Fraction(x) - Fraction(y_q)
    base = math.floor(t + _HALF)
    for a in (base - 1, base, base + 1):
        if abs(t - a) < psi and math.gcd(abs(a), q) == 1:
            return True
    return False


def _icbrt(n: int) -> int:
    """Integer cube root: largest k with k**3 <= n."""
    if n < 0:
        raise ValueError("cube root of a negative integer")
    if n == 0:
        return 0
    k = int(round(n ** (1.0 / 3.0)))
    while k**3 > n:
        k -= 1
    while (k + 1) ** 3 <= n:
        k += 1
    return k


class ApproxFunction:
    """A rational-valued weight family q -> psi(q).

    Kinds:
      const      psi(q) = c
      power      psi(q) = c * q**(-alpha), alpha a non-negative integer,
                 clipped to <= 1/2 unless clip=False
      table      explicit map q -> value, 0 off the table
      div3       min(1/2, q / (phi(q) * floor(q**(1/3)))), a clipped family
                 whose cubed normalized sum diverges like sum 1/q
      cx         the weight map of a counterexample instance

    Queries beyond support_cap (when set) return 0.
    """

    __slots__ = ("kind", "value", "alpha", "clip", "table", "instance", "support_cap", "spec")

    def __init__(self, kind, *, value=None, alpha=None, clip=True, table=None,
                 instance=None, support_cap=None, spec=None):
        self.kind = kind
        self.value = value
        self.alpha = alpha
        self.clip = clip
        self.table = table
        self.instance = instance
        self.support_cap = support_cap
        self.spec = spec if spec is not None else kind

    @classmethod
    def constant(cls, c, support_cap=None) -> "ApproxFunction":
        c = Fraction(c)
        if c < 0:
            raise ValueError("psi must be non-negative")
        return cls("const", value=c, support_cap=support_cap,
                   spec=f"const:{c.numerator}/{c.denominator}")

    @classmethod
    def power(cls, c, alpha: int, clip: bool = True, support_cap=None) -> "ApproxFunction":
        c = Fraction(c)
        if c < 0:
            raise ValueError("psi must be non-negative")
        if alpha < 0 or int(alpha) != alpha:
            raise ValueError("power exponent must be a non-negative integer")
        spec = f"pow:{c.numerator}/{c.denominator},{int(alpha)}"
        if not clip:
            spec += ",raw"
        return cls("power", value=c, alpha=int(alpha), clip=clip,
                   support_cap=support_cap, spec=spec)

    @classmethod
    def from_table(cls, mapping, support_cap=None, spec="table") -> "ApproxFunction":
        table = {int(q): Fraction(v) for q, v in mapping.items()}
        for q, v in table.items():
            if q < 1 or v < 0:
                raise ValueError("table entries need q >= 1 and psi >= 0")
        return cls("table", table=table, support_cap=support_cap, spec=spec)

    @classmethod
    def from_csv(cls, path, support_cap=None) -> "ApproxFunction":
        mapping = {}
        with open(path, newline="") as handle:
            for row in csv.reader(handle):
                if not row or row[0].startswith("#"):
                    continue
                mapping[int(row[0])] = parse_rational(row[1])
        return cls.from_table(mapping, support_cap=support_cap, spec=f"table:{path}")

    @classmethod
    def divergent_m3(cls, support_cap=None) -> "ApproxFunction":
        return cls("div3", support_cap=support_cap, spec="div3")

    @classmethod
    def counterexample(cls, instance, spec="cx") -> "ApproxFunction":
        return cls("cx", instance=instance, spec=spec)

    @classmethod
    def parse(cls, text: str, cx_loader=None) -> "ApproxFunction":
        """Parse "const:1/4", "pow:1/2,1[,raw]", "table:<path>", "div3",
        "cx:<path>"."""
        s = text.strip()
        if s == "div3":
            return cls.divergent_m3()
        if ":" not in s:
            raise ValueError(f"unrecognized psi spec: {text!r}")
        head, rest = s.split(":", 1)
        if head == "const":
            return cls.constant(parse_rational(rest))
        if head == "pow":
            parts = [p.strip() for p in rest.split(",")]
            if len(parts) not in (2, 3):
                raise ValueError(f"pow spec needs c,alpha: {text!r}")
            clip = True
            if len(parts) == 3:
                if parts[2] != "raw":
                    raise ValueError(f"unknown pow modifier: {parts[2]!r}")
                clip = False
            return cls.power(parse_rational(parts[0]), int(parts[1]), clip=clip)
        if head == "table":
            return cls.from_csv(rest)
        if head == "cx":
            if cx_loader is None:
                raise ValueError("no counterexample loader available for cx: specs")
            return cls.counterexample(cx_loader(rest), spec=s)
        raise ValueError(f"unrecognized psi spec: {text!r}")

    def __call__(self, q: int) -> Fraction:
        if q < 1:
            raise ValueError("q must be >= 1")
        if self.support_cap is not None and q > self.support_cap:
            return _ZERO
        if self.kind == "const":
            return self.value
        if self.kind == "power":
            value = self.value / Fraction(q) ** self.alpha
            if self.clip and value > _HALF:
                return _HALF
            return value
        if self.kind == "table":
            return self.table.get(q, _ZERO)
        if self.kind == "div3":
            value = Fraction(q, totient(q) * _icbrt(q))
            return value if value < _HALF else _HALF
        if self.kind == "cx":
            return self.instance.psi_of(q)
        raise AssertionError(f"unknown kind {self.kind}")

    def describe(self) -> str:
        return self.spec


class TargetSequence:
    """A target family q -> (y_q[0], ..., y_q[m-1]) of exact rationals."""

    __slots__ = ("kind", "m", "components", "table", "instance", "spec")

    def __init__(self, kind, m, *, components=None, table=None, instance=None, spec=None):
        if m < 1:
            raise ValueError("dimension must be >= 1")
        self.kind = kind
        self.m = m
        self.components = components
        self.table = table
        self.instance = instance
        self.spec = spec if spec is not None else kind

    @classmethod
    def zero(cls, m: int = 1) -> "TargetSequence":
        return cls("zero", m, spec="zero")

    @classmethod
    def constant(cls, components, m: int | None = None) -> "TargetSequence":
        comps = tuple(Fraction(c) for c in components)
        if m is None:
            m = len(comps)
        if len(comps) == 1 and m > 1:
            comps = comps * m  # broadcast a single shift to every coordinate
        if len(comps) != m:
            raise ValueError(f"{len(comps)} components for dimension {m}")
        spec = "const:" + ",".join(f"{c.numerator}/{c.denominator}" for c in comps)
        return cls("const", m, components=comps, spec=spec)

    @classmethod
    def from_table(cls, mapping, m: int, spec="table") -> "TargetSequence":
        table = {}
        for q, vec in mapping.items():
            comps = tuple(Fraction(v) for v in vec)
            if len(comps) != m:
                raise ValueError("table row dimension mismatch")
            table[int(q)] = comps
        return cls("table", m, table=table, spec=spec)

    @classmethod
    def from_csv(cls, path, m: int) -> "TargetSequence":
        mapping = {}
        with open(path, newline="") as handle:
            for row in csv.reader(handle):
                if not row or row[0].startswith("#"):
                    continue
                mapping[int(row[0])] = [parse_rational(v) for v in row[1 : m + 1]]
        return cls.from_table(mapping, m, spec=f"table:{path}")

    @classmethod
    def counterexample(cls, instance, spec="cx") -> "TargetSequence":
        return cls("cx", 1, instance=instance, spec=spec)

    @classmethod
    def parse(cls, text: str, m: int = 1, cx_loader=None) -> "TargetSequence":
        """Parse "zero", "const:1/3[,2/5,...]", "table:<path>", "cx:<path>"."""
        s = text.strip()
        if s == "zero":
            return cls.zero(m)
        if ":" not in s:
            raise ValueError(f"unrecognized target spec: {text!r}")
        head, rest = s.split(":", 1)
        if head == "const":
            return cls.constant([parse_rational(v) for v in rest.split(",")], m)
        if head == "table":
            return cls.from_csv(rest, m)
        if head == "cx":
            if cx_loader is None:
                raise ValueError("no counterexample loader available for cx: specs")
            if m != 1:
                raise ValueError("counterexample targets are one-dimensional")
            return cls.counterexample(cx_loader(rest), spec=s)
        raise ValueError(f"unrecognized target spec: {text!r}")

    def __call__(self, q: int) -> tuple[Fraction, ...]:
        if q < 1:
            raise ValueError("q must be >= 1")
        if self.kind == "zero":
            return (_ZERO,) * self.m
        if self.kind == "const":
            return self.components
        if self.kind == "table":
            return self.table.get(q, (_ZERO,) * self.m)
        if self.kind == "cx":
            return (self.instance.y_of(q),)
        raise AssertionError(f"unknown kind {self.kind}")

    def describe(self) -> str:
        return self.spec
