"""Pairwise overlap machinery for approximation sets.

Given q != r, the pair decomposes over each prime p with valuations
u = v_p(q), v = v_p(r) into three parts

    ell = prod over u = v of p**u          (the balanced part)
    em  = prod over u != v of p**min(u,v)
    en  = prod over u != v of p**max(u,v)

so gcd(q,r) = ell*em, lcm(q,r) = ell*en, and em | en.  The number of
coprime residue pairs (a, b) with a/q - b/r = c/lcm(q,r) has the closed
form

    f(c) = [gcd(c, en) = 1] * phi(em) * ell
           * prod over p | gcd(ell, c) of (1 - 1/p)
           * prod over p | ell, p not | c of (1 - 2/p),

always a non-negative integer.  This module carries the closed form and
its brute-force twin, the overlap geometry (interval widths, the sifting
window length D, the thresholds), the exact pairwise overlap measure, the
bound right-hand sides it is checked against, and exact sifted counts of
integers coprime to a modulus inside a rational window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .approx import build_approx_set, coprime_residues
from .arith import factorize, prime_tail_threshold, totient
from .errors import BudgetError
from .torus import measure_intersection

_ZERO = Fraction(0)


@dataclass(frozen=True)
class PairDecomposition:
    """ell/em/en splitting of a pair of moduli, with gcd and lcm."""

    q: int
    r: int
    gcd: int
    lcm: int
    ell: int
    em: int
    en: int
    prime_valuations: tuple[tuple[int, int, int], ...]  # (p, v_p(q), v_p(r))


def decompose_pair(q: int, r: int) -> PairDecomposition:
    """Decompose (q, r) and assert every structural identity on the spot."""
    if q < 1 or r < 1:
        raise ValueError("moduli must be >= 1")
    fq = dict(factorize(q))
    fr = dict(factorize(r))
    ell = em = en = 1
    valuations = []
    for p in sorted(set(fq) | set(fr)):
        u = fq.get(p, 0)
        v = fr.get(p, 0)
        valuations.append((p, u, v))
        if u == v:
            ell *= p**u
        else:
            em *= p ** min(u, v)
            en *= p ** max(u, v)
    g = math.gcd(q, r)
    l = q * r // g
    dec = PairDecomposition(
        q=q, r=r, gcd=g, lcm=l, ell=ell, em=em, en=en,
        prime_valuations=tuple(valuations),
    )
    assert g == ell * em
    assert l == ell * en
    assert q * r * em == g * g * en
    assert math.gcd(ell, em * en) == 1
    assert en % em == 0
    assert totient(em) * totient(ell) == totient(g)
    assert totient(em) * totient(ell) ** 2 * totient(en) == totient(q) * totient(r)
    return dec


def _balanced_primes(dec: PairDecomposition) -> list[int]:
    return [p for p, u, v in dec.prime_valuations if u == v]


def _split_primes(dec: PairDecomposition) -> list[int]:
    return [p for p, u, v in dec.prime_valuations if u != v]


def coprime_pair_count(dec: PairDecomposition, c: int) -> int:
    """Closed-form f(c): pairs of coprime residues at integer difference c.

    c is reduced modulo whatever each gcd needs; the result is asserted to
    be a non-negative integer before returning.
    """
    if math.gcd(abs(c), dec.en) != 1:
        return 0
    value = Fraction(totient(dec.em) * dec.ell)
    for p in _balanced_primes(dec):
        if c % p == 0:
            value *= 1 - Fraction(1, p)
        else:
            value *= 1 - Fraction(2, p)
    assert value.denominator == 1 and value >= 0
    return int(value)


def coprime_pair_histogram(dec: PairDecomposition) -> list[int]:
    """Brute-force f over a full period: histogram of (a*r' - b*q') mod lcm
    over all coprime residue pairs.  The independent oracle for the closed
    form; its total mass is phi(q) * phi(r)."""
    rp = dec.lcm // dec.q
    qp = dec.lcm // dec.r
    hist = [0] * dec.lcm
    residues_r = coprime_residues(dec.r)
    for a in coprime_residues(dec.q):
        base = a * rp
        for b in residues_r:
            hist[(base - b * qp) % dec.lcm] += 1
    return hist


def coprime_pair_count_brute(q: int, r: int, c: int) -> int:
    """Single-value brute force count, c interpreted mod lcm(q, r)."""
    dec = decompose_pair(q, r)
    return coprime_pair_histogram(dec)[c % dec.lcm]


@dataclass(frozen=True)
class OverlapGeometry:
    """Exact geometry of a pair: interval lengths, window, tail threshold.

    min_length / max_length are the two interval lengths 2*psi/q.
    window_length = max_length * lcm is the sifting window length;
    [window_lo, window_hi] is that window shifted by (r/g) y_q - (q/g) y_r.
    The cover window [cover_lo, cover_hi] is wider: it provably contains
    the integer difference c of every pair of intersecting intervals
    (half-width lcm * (psi(q)/q + psi(r)/r), centered where the differences
    actually fall).  tail_threshold is the larger prime-tail threshold of
    the two cofactors q/gcd and r/gcd.
    """

    q: int
    r: int
    min_length: Fraction
    max_length: Fraction
    window_length: Fraction
    window_lo: Fraction
    window_hi: Fraction
    cover_lo: Fraction
    cover_hi: Fraction
    tail_threshold: int

    @property
    def degenerate(self) -> bool:
        return self.window_length == 0


def overlap_geometry(q: int, r: int, psi, y_q=0, y_r=0) -> OverlapGeometry:
    psi_q = Fraction(psi(q)) if callable(psi) else Fraction(psi)
    psi_r = Fraction(psi(r)) if callable(psi) else Fraction(psi)
    if psi_q < 0 or psi_r < 0:
        raise ValueError("psi must be non-negative")
    wq = Fraction(psi_q, q)
    wr = Fraction(psi_r, r)
    g = math.gcd(q, r)
    l = q * r // g
    min_length = 2 * min(wq, wr)
    max_length = 2 * max(wq, wr)
    window_length = max_length * l
    shift = Fraction(r, g) * Fraction(y_q) - Fraction(q, g) * Fraction(y_r)
    window_lo = -window_length / 2 + shift
    window_hi = window_length / 2 + shift
    cover_center = -shift
    cover_halfwidth = l * (wq + wr)
    threshold = max(prime_tail_threshold(q // g), prime_tail_threshold(r // g))
    return OverlapGeometry(
        q=q, r=r, min_length=min_length, max_length=max_length,
        window_length=window_length,
        window_lo=window_lo, window_hi=window_hi,
        cover_lo=cover_center - cover_halfwidth,
        cover_hi=cover_center + cover_halfwidth,
        tail_threshold=threshold,
    )


def pair_overlap_exact(q: int, r: int, psi, y_q=0, y_r=0) -> Fraction:
    """Exact measure of the intersection of the two approximation sets.

    q = r is allowed and yields the self-intersection (the set measure),
    which is reported for diagnostics but excluded from bound checks.
    """
    psi_q = psi(q) if callable(psi) else psi
    psi_r = psi(r) if callable(psi) else psi
    a = build_approx_set(q, psi_q, y_q)
    b = build_approx_set(r, psi_r, y_r)
    return measure_intersection(a, b)


def overlap_bound_terms(
    q: int, r: int, psi, dec: PairDecomposition | None = None,
    geometry: OverlapGeometry | None = None,
) -> tuple[Fraction, Fraction]:
    """The two addends of the overlap upper bound.

    addend1 = [D > 1] * (psi(q)phi(q)/q) * (psi(r)phi(r)/r)
              * prod over p | q*r/gcd**2 with p > D of (1 + 1/p)
    addend2 = phi(gcd(q, r)) * min(psi(q)/q, psi(r)/r)

    Both exact; the bound itself holds up to an absolute constant that is
    tracked empirically, never assumed.
    """
    if dec is None:
        dec = decompose_pair(q, r)
    if geometry is None:
        geometry = overlap_geometry(q, r, psi)
    psi_q = Fraction(psi(q)) if callable(psi) else Fraction(psi)
    psi_r = Fraction(psi(r)) if callable(psi) else Fraction(psi)
    addend2 = totient(dec.gcd) * min(Fraction(psi_q, q), Fraction(psi_r, r))
    if geometry.window_length <= 1:
        return _ZERO, addend2
    addend1 = Fraction(psi_q * totient(q), q) * Fraction(psi_r * totient(r), r)
    for p in _split_primes(dec):
        if p > geometry.window_length:
            addend1 *= 1 + Fraction(1, p)
    return addend1, addend2


def main_term(
    q: int, r: int, psi, dec: PairDecomposition | None = None,
    geometry: OverlapGeometry | None = None, strict_indicator: bool = False,
) -> Fraction:
    """The main pairwise term M(q, r).

    Identical to addend1 except for the window indicator: the default uses
    D >= 1 (what the pairwise sums downstream use); strict_indicator=True
    switches to D > 1.  The two differ only on the measure-zero locus D = 1.
    """
    if dec is None:
        dec = decompose_pair(q, r)
    if geometry is None:
        geometry = overlap_geometry(q, r, psi)
    if geometry.window_length < 1 or (strict_indicator and geometry.window_length == 1):
        return _ZERO
    psi_q = Fraction(psi(q)) if callable(psi) else Fraction(psi)
    psi_r = Fraction(psi(r)) if callable(psi) else Fraction(psi)
    value = Fraction(psi_q * totient(q), q) * Fraction(psi_r * totient(r), r)
    for p in _split_primes(dec):
        if p > geometry.window_length:
            value *= 1 + Fraction(1, p)
    return value


def trivial_overlap_bound(q: int, r: int, psi) -> Fraction:
    """Elementary overlap bound psi(q)psi(r) + (psi(q)/q) phi(gcd(q, r)).

    Stated for ordered pairs r < q; callers order the pair first.
    """
    if not 1 <= r < q:
        raise ValueError("trivial_overlap_bound requires 1 <= r < q")
    psi_q = Fraction(psi(q)) if callable(psi) else Fraction(psi)
    psi_r = Fraction(psi(r)) if callable(psi) else Fraction(psi)
    return psi_q * psi_r + Fraction(psi_q, q) * totient(math.gcd(q, r))


def overlap_count_bound(q: int, r: int, psi, y_q=0, y_r=0) -> Fraction:
    """The shorter interval length times the f-count over the cover window.

    Every pair of intersecting intervals overlaps in measure at most
    min_length and has its integer difference inside the cover window, so
    this always dominates the exact overlap measure.
    """
    geometry = overlap_geometry(q, r, psi, y_q, y_r)
    if geometry.min_length == 0:
        return _ZERO
    dec = decompose_pair(q, r)
    lo = math.ceil(geometry.cover_lo)
    hi = math.floor(geometry.cover_hi)
    count = 0
    for c in range(lo, hi + 1):
        count += coprime_pair_count(dec, c)
    return geometry.min_length * count


def sifted_interval_count(
    x, y, n: int, omega_cap: int = 24
) -> tuple[int, Fraction, Fraction]:
    """Exact count of integers c in [x, y] with gcd(c, n) = 1.

    Inclusion-exclusion over the squarefree divisors of rad(n).  Returns
    (count, main_term, error) where main_term = (y - x) * phi(rad n)/rad n
    and error = |count - main_term|, which inclusion-exclusion bounds by
    2**omega(n).  Both window endpoints are inclusive.  Refuses moduli with
    more than omega_cap distinct primes (the 2**omega subset walk blows up).
    """
    x = Fraction(x)
    y = Fraction(y)
    if x > y:
        raise ValueError("window needs x <= y")
    if n < 1:
        raise ValueError("modulus must be >= 1")
    primes = [p for p, _ in factorize(n)]
    if len(primes) > omega_cap:
        raise BudgetError(
            f"{len(primes)} distinct primes exceed the inclusion-exclusion cap {omega_cap}"
        )
    # Signed squarefree divisors of rad(n).
    signed: list[tuple[int, int]] = [(1, 1)]
    for p in primes:
        signed += [(d * p, -sign) for d, sign in signed]
    count = 0
    for d, sign in signed:
        count += sign * (math.floor(y / d) - math.ceil(x / d) + 1)
    main = (y - x)
    for p in primes:
        main *= 1 - Fraction(1, p)
    error = abs(count - main)
    assert error <= 2 ** len(primes)
    return count, main, error


@dataclass(frozen=True)
class OverlapReport:
    """Everything the CLI prints for one pair."""

    q: int
    r: int
    ell: int
    em: int
    en: int
    D: Fraction
    exact_overlap: Fraction
    addend1: Fraction
    addend2: Fraction
    M: Fraction
    trivial_rhs: Fraction | None
    bound_ratio: Fraction | None  # exact / (addend1 + addend2)
    trivial_ratio: Fraction | None


def overlap_report(q: int, r: int, psi, y_q=0, y_r=0) -> OverlapReport:
    dec = decompose_pair(q, r)
    geometry = overlap_geometry(q, r, psi, y_q, y_r)
    exact = pair_overlap_exact(q, r, psi, y_q, y_r)
    addend1, addend2 = overlap_bound_terms(q, r, psi, dec, geometry)
    m_value = main_term(q, r, psi, dec, geometry)
    hi, lo = (q, r) if q > r else (r, q)
    trivial = trivial_overlap_bound(hi, lo, psi) if q != r else None
    rhs = addend1 + addend2
    return OverlapReport(
        q=q, r=r, ell=dec.ell, em=dec.em, en=dec.en, D=geometry.window_length,
        exact_overlap=exact, addend1=addend1, addend2=addend2, M=m_value,
        trivial_rhs=trivial,
        bound_ratio=exact / rhs if rhs > 0 else None,
        trivial_ratio=exact / trivial if trivial else None,
    )
