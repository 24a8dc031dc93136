import math
import random
from fractions import Fraction

import pytest

from torusapprox.approx import ApproxFunction
from torusapprox.arith import totient
from torusapprox.errors import BudgetError
from torusapprox.overlap import (
    coprime_pair_count,
    coprime_pair_count_brute,
    coprime_pair_histogram,
    decompose_pair,
    main_term,
    overlap_bound_terms,
    overlap_count_bound,
    overlap_geometry,
    overlap_report,
    pair_overlap_exact,
    sifted_interval_count,
    trivial_overlap_bound,
)

F = Fraction

CONST4 = ApproxFunction.constant(F(1, 4))


def test_decomposition_examples():
    dec = decompose_pair(12, 18)
    assert (dec.ell, dec.em, dec.en) == (1, 6, 36)
    dec = decompose_pair(6, 10)
    assert (dec.ell, dec.em, dec.en) == (2, 1, 15)
    dec = decompose_pair(9, 9)
    assert (dec.ell, dec.em, dec.en) == (9, 1, 1)


def test_decomposition_identities_random():
    rng = random.Random(53)
    for _ in range(400):
        q = rng.randint(1, 10**4)
        r = rng.randint(1, 10**4)
        dec = decompose_pair(q, r)  # identities asserted on construction
        assert dec.gcd == math.gcd(q, r)
        assert dec.lcm == q * r // dec.gcd
        assert F(q * r, dec.gcd**2) == F(dec.en, dec.em)


def test_pair_count_examples():
    assert coprime_pair_count(decompose_pair(3, 2), 1) == 1
    d = decompose_pair(6, 10)
    assert coprime_pair_count(d, 3) == 0
    assert coprime_pair_count(d, 4) == 1
    hist = coprime_pair_histogram(decompose_pair(3, 2))
    assert [c for c, v in enumerate(hist) if v] == [1, 5]
    assert sum(coprime_pair_histogram(d)) == totient(6) * totient(10) == 8
    assert coprime_pair_histogram(decompose_pair(7, 7))[0] == totient(7)
    assert coprime_pair_count_brute(6, 10, 4) == 1


def test_pair_count_formula_vs_brute_small():
    # module-scale slice of the exhaustive acceptance check
    for q in range(2, 25):
        for r in range(1, q):
            dec = decompose_pair(q, r)
            hist = coprime_pair_histogram(dec)
            for c, expected in enumerate(hist):
                assert coprime_pair_count(dec, c) == expected
            assert sum(hist) == totient(q) * totient(r)
            # negative representatives reduce the same way
            assert coprime_pair_count(dec, -1) == hist[dec.lcm - 1]


def test_geometry_examples():
    table = ApproxFunction.from_table({6: F(1, 3), 10: F(1, 5)})
    geo = overlap_geometry(6, 10, table)
    assert geo.window_length == F(10, 3)
    geo = overlap_geometry(2, 3, CONST4)
    assert (geo.min_length, geo.max_length, geo.window_length) == (F(1, 6), F(1, 4), F(3, 2))
    assert (geo.window_lo, geo.window_hi) == (F(-3, 4), F(3, 4))
    zero = ApproxFunction.constant(0)
    assert overlap_geometry(5, 7, zero).degenerate


def test_geometry_width_identity():
    # em * ell * D * delta = 4 psi(q) psi(r), the exact form of the
    # width/window product identity
    rng = random.Random(59)
    for _ in range(200):
        q = rng.randint(1, 300)
        r = rng.randint(1, 300)
        psi_q = F(rng.randint(1, 20), 40)
        psi_r = F(rng.randint(1, 20), 40)
        psi = ApproxFunction.from_table({q: psi_q, r: psi_r})
        if q == r:
            continue
        dec = decompose_pair(q, r)
        geo = overlap_geometry(q, r, psi)
        assert dec.em * dec.ell * geo.window_length * geo.min_length == 4 * psi_q * psi_r


def test_geometry_window_shift():
    geo = overlap_geometry(2, 3, CONST4, y_q=F(1, 5), y_r=F(1, 7))
    shift = F(3, 1) * F(1, 5) - F(2, 1) * F(1, 7)
    assert geo.window_lo == -geo.window_length / 2 + shift
    assert geo.window_hi - geo.window_lo == geo.window_length
    # thresholds of the cofactors: the tail of 2 at n=1 is exactly 1/2
    assert geo.tail_threshold == 2


def test_exact_overlap_examples():
    assert pair_overlap_exact(2, 3, CONST4) == F(1, 12)
    assert pair_overlap_exact(2, 4, ApproxFunction.constant(F(1, 8))) == 0
    assert pair_overlap_exact(2, 3, ApproxFunction.constant(0)) == 0


def test_bound_terms_examples():
    addend1, addend2 = overlap_bound_terms(2, 3, CONST4)
    assert addend2 == F(1, 12)
    assert addend2 >= pair_overlap_exact(2, 3, CONST4)
    table = ApproxFunction.from_table({6: F(1, 3), 10: F(1, 5)})
    addend1, _ = overlap_bound_terms(6, 10, table)
    assert addend1 == F(1, 9) * F(2, 25) * F(6, 5)
    # indicator off below D = 1
    tiny = ApproxFunction.constant(F(1, 100))
    addend1, _ = overlap_bound_terms(2, 3, tiny)
    assert addend1 == 0


def test_main_term_examples():
    table = ApproxFunction.from_table({6: F(1, 3), 10: F(1, 5)})
    assert main_term(6, 10, table) == F(4, 375)
    assert main_term(2, 3, ApproxFunction.constant(F(1, 100))) == 0
    half = ApproxFunction.constant(F(1, 2))
    assert main_term(2, 3, half) == F(1, 12)


def test_main_term_indicator_flag():
    # D = 1 exactly: q=2, r=3, psi with max width 1/12
    psi = ApproxFunction.from_table({2: F(1, 6), 3: F(1, 4)})
    geo = overlap_geometry(2, 3, psi)
    assert geo.window_length == 1
    assert main_term(2, 3, psi) > 0
    assert main_term(2, 3, psi, strict_indicator=True) == 0


def test_trivial_bound():
    assert trivial_overlap_bound(3, 2, CONST4) == F(7, 48)
    assert trivial_overlap_bound(4, 2, CONST4) == F(1, 8)
    assert trivial_overlap_bound(3, 2, ApproxFunction.constant(0)) == 0
    with pytest.raises(ValueError):
        trivial_overlap_bound(2, 3, CONST4)


def test_count_bound_dominates_exact_overlap():
    rng = random.Random(61)
    for _ in range(150):
        q = rng.randint(1, 60)
        r = rng.randint(1, 60)
        if q == r:
            continue
        psi_q = F(rng.randint(0, 12), 24)
        psi_r = F(rng.randint(0, 12), 24)
        psi = ApproxFunction.from_table({q: psi_q, r: psi_r})
        y_q = F(rng.randint(-40, 40), rng.randint(1, 12))
        y_r = F(rng.randint(-40, 40), rng.randint(1, 12))
        exact = pair_overlap_exact(q, r, psi, y_q, y_r)
        assert overlap_count_bound(q, r, psi, y_q, y_r) >= exact


def test_sifted_count_examples():
    count, main, error = sifted_interval_count(0, 10, 6)
    assert (count, main, error) == (3, F(10, 3), F(1, 3))
    count, main, error = sifted_interval_count(0, 30, 30)
    assert count == 8 == totient(30)
    count, _, error = sifted_interval_count(F(1, 3), F(22, 3), 1)
    assert count == 7 and error <= 1


def test_sifted_count_random():
    rng = random.Random(67)
    for _ in range(400):
        n = rng.randint(1, 10**5)
        x = F(rng.randint(-500, 500), rng.randint(1, 17))
        y = x + F(rng.randint(0, 900), rng.randint(1, 17))
        count, main, error = sifted_interval_count(x, y, n)
        lo = math.ceil(x)
        hi = math.floor(y)
        direct = sum(1 for c in range(lo, hi + 1) if math.gcd(c, n) == 1)
        assert count == direct


def test_sifted_count_omega_cap():
    n = 2 * 3 * 5 * 7 * 11 * 13 * 17 * 19
    with pytest.raises(BudgetError):
        sifted_interval_count(0, 100, n, omega_cap=7)


def test_overlap_report_fields():
    report = overlap_report(2, 3, CONST4)
    assert report.exact_overlap == F(1, 12)
    assert report.addend2 == F(1, 12)
    assert report.trivial_rhs == F(7, 48)
    assert report.bound_ratio == report.exact_overlap / (report.addend1 + report.addend2)
    self_report = overlap_report(5, 5, CONST4)
    assert self_report.trivial_rhs is None
    assert self_report.exact_overlap == pair_overlap_exact(5, 5, CONST4)
