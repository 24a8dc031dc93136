"""Exact integer and rational number theory.

Factorization (direct and sieve-backed), Euler's totient, radicals and
smooth parts, runs of consecutive primes chosen against a density target,
and the prime-tail threshold function

    g(s) = min { n >= 1 : sum of 1/p over primes p | s with p > n  <  1/2 },

all computed with unbounded integers and fractions.Fraction.  Everything
here is pure and safe to call from worker processes.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import BudgetError

# Witness set proving primality for every n < 3.3 * 10**24, far past 64 bits.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

PRIME_TEST_LIMIT = 1 << 64
DEFAULT_SPF_CAP = 10_000_000
DEFAULT_PRIME_RUN_CAP = 20_000


def is_prime(n: int) -> bool:
    """Deterministic primality test for integers below 2**64."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    if n >= PRIME_TEST_LIMIT:
        raise ValueError("primality testing is limited to 64-bit integers")
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than n."""
    if n < 2:
        return 2
    c = n + 1
    if c % 2 == 0:
        if c == 2:
            return 2
        c += 1
    while not is_prime(c):
        c += 2
    return c


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization as (prime, exponent) pairs with primes increasing.

    factorize(1) is the empty list; n = 0 and negatives are rejected, as are
    integers of 64 bits and more (trial division would not terminate in
    reasonable time there, and nothing in this package needs it).
    """
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    if n >= PRIME_TEST_LIMIT:
        raise ValueError("factorization is limited to 64-bit integers")
    out: list[tuple[int, int]] = []
    m = n
    for p in (2, 3):
        if m % p == 0:
            e = 0
            while m % p == 0:
                e += 1
                m //= p
            out.append((p, e))
    d = 5
    while d * d <= m:
        for q in (d, d + 2):  # 6k - 1, 6k + 1
            if m % q == 0:
                e = 0
                while m % q == 0:
                    e += 1
                    m //= q
                out.append((q, e))
        d += 6
    if m > 1:
        out.append((m, 1))
    return out


def spf_table(limit: int, cap: int = DEFAULT_SPF_CAP) -> list[int]:
    """Smallest-prime-factor table for 1..limit.

    table[n] is the least prime dividing n; table[1] = 0 marks the unit.
    Refuses limits above `cap` rather than exhausting memory.
    """
    if limit < 1:
        raise ValueError("spf_table requires limit >= 1")
    if limit > cap:
        raise BudgetError(f"spf table of size {limit} exceeds the cap {cap}")
    table = [0] * (limit + 1)
    for p in range(2, limit + 1):
        if table[p] == 0:
            for m in range(p, limit + 1, p):
                if table[m] == 0:
                    table[m] = p
    return table


def factorize_with_table(n: int, table: list[int]) -> list[tuple[int, int]]:
    """Factorization by repeated smallest-prime-factor lookups."""
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    if n >= len(table):
        raise ValueError("integer outside the sieve range")
    out: list[tuple[int, int]] = []
    m = n
    while m > 1:
        p = table[m]
        e = 0
        while m % p == 0:
            e += 1
            m //= p
        out.append((p, e))
    return out


def totient(n: int) -> int:
    """Euler's totient."""
    if n < 1:
        raise ValueError("totient requires n >= 1")
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result


def totient_range(limit: int) -> list[int]:
    """Totient values for 0..limit (index 0 unused, set to 0)."""
    if limit < 1:
        raise ValueError("totient_range requires limit >= 1")
    phi = list(range(limit + 1))
    phi[0] = 0
    for p in range(2, limit + 1):
        if phi[p] == p:  # p prime
            for m in range(p, limit + 1, p):
                phi[m] -= phi[m] // p
    return phi


def radical(n: int) -> int:
    """Product of the distinct primes dividing n; radical(1) = 1."""
    r = 1
    for p, _ in factorize(n):
        r *= p
    return r


def radical_and_smooth_part(n: int, bound) -> tuple[int, int]:
    """Radical of n together with its bound-smooth part.

    The smooth part keeps the full prime power p**v for every prime
    p <= bound dividing n.  The bound may be a Fraction.
    """
    b = Fraction(bound)
    if n < 1 or b < 1:
        raise ValueError("radical_and_smooth_part requires n >= 1 and bound >= 1")
    rad = 1
    smooth = 1
    for p, e in factorize(n):
        rad *= p
        if p <= b:
            smooth *= p**e
    return rad, smooth


def primes_for_epsilon(
    above: int, eps, max_run: int = DEFAULT_PRIME_RUN_CAP
) -> tuple[list[int], Fraction]:
    """Shortest run of consecutive primes past `above` whose totient density
    drops strictly below eps.

    Returns (primes, product) where product = prod (1 - 1/p) < eps and the
    run one prime shorter still has product >= eps.  The first prime is the
    smallest prime exceeding `above`.  Refuses runs longer than max_run,
    reporting the partial product reached.
    """
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    primes: list[int] = []
    product = Fraction(1)
    candidate = next_prime(above)
    while not product < eps:
        if len(primes) >= max_run:
            # The exact partial product can run to thousands of digits, so
            # the message carries a decimal rendering; the exact value rides
            # on the exception.
            error = BudgetError(
                f"prime run cap {max_run} reached above {above}; "
                f"partial product ~ {float(product):.6g} (target {float(eps):.6g})"
            )
            error.partial_product = product
            error.primes = primes
            raise error
        primes.append(candidate)
        product *= Fraction(candidate - 1, candidate)
        if product < eps:
            break
        candidate = next_prime(candidate)
    return primes, product


def prime_tail_threshold(s: int) -> int:
    """Least n >= 1 such that sum of 1/p over primes p | s with p > n is < 1/2.

    Depends on s only through its radical.  Computed with exact fractions.
    """
    if s < 1:
        raise ValueError("prime_tail_threshold requires s >= 1")
    primes = [p for p, _ in factorize(s)]
    half = Fraction(1, 2)
    tail = sum((Fraction(1, p) for p in primes), Fraction(0))
    if tail < half:
        return 1
    # Raising n past a prime removes exactly that prime from the tail, and
    # nothing changes strictly between primes, so the minimum sits on a prime.
    for p in primes:
        tail -= Fraction(1, p)
        if tail < half:
            return p
    raise AssertionError("empty tail must fall below 1/2")


def prime_tail_threshold_count(x: int, v: int, table: list[int] | None = None) -> int:
    """Exact number of n < x with prime_tail_threshold(n) == v."""
    if x < 1 or v < 1:
        raise ValueError("prime_tail_threshold_count requires x >= 1 and v >= 1")
    if x == 1:
        return 0
    if table is None:
        table = spf_table(x - 1)
    half = Fraction(1, 2)
    memo: dict[tuple[int, ...], int] = {}
    count = 0
    for n in range(1, x):
        primes = tuple(p for p, _ in factorize_with_table(n, table))
        g = memo.get(primes)
        if g is None:
            tail = sum((Fraction(1, p) for p in primes), Fraction(0))
            if tail < half:
                g = 1
            else:
                for p in primes:
                    tail -= Fraction(1, p)
                    if tail < half:
                        g = p
                        break
            memo[primes] = g
        if g == v:
            count += 1
    return count
