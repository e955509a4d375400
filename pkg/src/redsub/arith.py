"""Small exact helpers on rational integers."""

from __future__ import annotations

import math
from functools import reduce


def ord_p(n: int, p: int) -> float:
    """p-adic valuation; ``math.inf`` for zero."""
    if n == 0:
        return math.inf
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def lcm(*values: int) -> int:
    return reduce(lambda a, b: abs(a * b) // math.gcd(a, b) if a and b else 0, values, 1)


def factorint(n: int) -> dict[int, int]:
    """Trial-division factorization of a positive integer."""
    if n <= 0:
        raise ValueError("factorint expects a positive integer")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes_between(lo: int, hi: int) -> list[int]:
    """All primes p with lo <= p <= hi (sieve of Eratosthenes)."""
    if hi < 2:
        return []
    sieve = bytearray([1]) * (hi + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(hi) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, hi + 1, i)))
    return [i for i in range(max(lo, 2), hi + 1) if sieve[i]]


def crt(residues: list[int], moduli: list[int]) -> tuple[int, int]:
    """Combine x = r_i mod m_i for pairwise coprime m_i."""
    x, m = 0, 1
    for r, mi in zip(residues, moduli):
        # x + m*k = r mod mi
        k = ((r - x) * pow(m, -1, mi)) % mi if mi > 1 else 0
        x += m * k
        m *= mi
    return x % m, m


def sqrt_mod(a: int, p: int) -> int | None:
    """A square root of a modulo an odd prime p (Tonelli-Shanks), or None."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r
