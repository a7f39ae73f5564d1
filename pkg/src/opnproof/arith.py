"""Exact big-integer arithmetic: primality, budgeted factoring, sigma of prime powers.

Primality envelope (documented, deterministic, no randomness anywhere):

* n < 3,317,044,064,679,887,385,961,981 (~2^81.5): strong Miller-Rabin with the
  13 fixed bases 2..41. Unconditionally correct in this range.
* larger n: BPSW (strong base-2 test + strong Lucas test with standard parameter
  selection) plus strong Miller-Rabin with the 25 prime bases up to 97, plus a
  budgeted Pocklington n-1 certification attempt. When the certificate completes
  the verdict is unconditional; otherwise it rests on the fixed-base battery, for
  which no composite passing all tiers is known. ``primality_method(n)`` reports
  which tier decided a given input so certificates stay auditable.

All functions are pure; the lazily built prime table is append-only and safe to
share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Factorization",
    "FactorBudget",
    "DEFAULT_BUDGET",
    "SUCCESSOR_BUDGET",
    "MR13_LIMIT",
    "is_prime",
    "primality_method",
    "sigma_prime_power",
    "factorize",
    "odd_prime_divisors_of_successor",
]

# Largest bound for which the first 13 prime bases are a proven deterministic
# Miller-Rabin battery (Sorenson & Webster verification).
MR13_LIMIT = 3_317_044_064_679_887_385_961_981
_MR13_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR25_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
               53, 59, 61, 67, 71, 73, 79, 83, 89, 97)

_TRIAL_LIMIT = 1_000_000
_TRIAL_BLOCK = 4096

_small_primes: list[int] = []
_blocks: list[tuple[int, int]] = []          # (start index, product of block primes)
_small_prime_set: set[int] = set()


def _ensure_tables() -> None:
    if _small_primes:
        return
    sieve = bytearray([1]) * (_TRIAL_LIMIT + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(_TRIAL_LIMIT) + 1):
        if sieve[p]:
            step = len(range(p * p, _TRIAL_LIMIT + 1, p))
            sieve[p * p:: p] = b"\x00" * step
    primes = [i for i in range(2, _TRIAL_LIMIT + 1) if sieve[i]]
    blocks = []
    for i in range(0, len(primes), _TRIAL_BLOCK):
        prod = 1
        for p in primes[i: i + _TRIAL_BLOCK]:
            prod *= p
        blocks.append((i, prod))
    # Publish lists only when fully built; concurrent first calls may both
    # build, harmlessly.
    _blocks.extend(blocks)
    _small_prime_set.update(primes)
    _small_primes.extend(primes)


def small_primes_up_to(bound: int) -> list[int]:
    """Prime table up to min(bound, 10^6); chains and tests share it."""
    _ensure_tables()
    if bound >= _TRIAL_LIMIT:
        return list(_small_primes)
    import bisect
    return _small_primes[: bisect.bisect_right(_small_primes, bound)]


def _mr_round(n: int, a: int, d: int, s: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _mr_battery(n: int, bases: tuple[int, ...]) -> bool:
    d = n - 1
    s = (d & -d).bit_length() - 1
    d >>= s
    for a in bases:
        if a % n == 0:
            continue
        if not _mr_round(n, a, d, s):
            return False
    return True


def _jacobi(a: int, n: int) -> int:
    # n odd positive
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _lucas_strong(n: int) -> bool:
    """Strong Lucas test, parameters D = 5, -7, 9, ... with (D|n) = -1."""
    if _is_square(n):
        return False
    D = 5
    while True:
        j = _jacobi(D, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -(D + 2) if D > 0 else -(D - 2)
    P = 1
    Q = (1 - D) // 4

    d = n + 1
    s = (d & -d).bit_length() - 1
    d >>= s

    # Compute U_d, V_d mod n by binary ladder.
    U, V, Qk = 1, P, Q % n
    for bit in bin(d)[3:]:
        U = U * V % n
        V = (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = (P * U + V), (D * U + P * V)
            if U & 1:
                U += n
            if V & 1:
                V += n
            U = (U >> 1) % n
            V = (V >> 1) % n
            Qk = Qk * Q % n
    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        if V == 0:
            return True
        Qk = Qk * Qk % n
    return False


def _is_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def _iroot(n: int, k: int) -> int:
    """Floor of the k-th root."""
    if n < 2:
        return n
    x = int(round(n ** (1.0 / k)))
    while x > 1 and x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


_cert_cache: dict[int, bool] = {}


def _certify_pocklington(n: int, depth: int = 0) -> bool:
    """Try to prove primality of a base-battery survivor via the n-1 method.

    Needs the fully factored part F of n-1 to exceed sqrt(n). Budgeted and
    deterministic; False means "no certificate found", not "composite".
    """
    if depth > 3:
        return False
    if n in _cert_cache:
        return _cert_cache[n]
    fac = factorize(n - 1, _CERT_BUDGET)
    proven: list[int] = []
    for p, _ in fac.factors:
        if p < MR13_LIMIT or _certify_pocklington(p, depth + 1):
            proven.append(p)
        else:
            _cert_cache[n] = False
            return False
    F = 1
    for p, e in fac.factors:
        F *= p ** e
    if fac.cofactor != 1 or F * F <= n:
        _cert_cache[n] = False
        return False
    ok = True
    for q in proven:
        found = False
        for a in _MR25_BASES:
            if pow(a, n - 1, n) != 1:
                ok = False
                break
            if math.gcd(pow(a, (n - 1) // q, n) - 1, n) == 1:
                found = True
                break
        if not ok or not found:
            ok = False
            break
    _cert_cache[n] = ok
    if len(_cert_cache) > 100_000:
        _cert_cache.clear()
    return ok


def is_prime(n: int) -> bool:
    """Deterministic primality test; total for all n >= 0.

    See the module docstring for the correctness envelope per size tier.
    """
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
        if n % p == 0:
            return n == p
    if n < 3_215_031_751:  # proven bound for the 4-base battery
        return _mr_battery(n, (2, 3, 5, 7))
    if n < MR13_LIMIT:
        return _mr_battery(n, _MR13_BASES)
    if not _mr_battery(n, _MR25_BASES):
        return False
    return _lucas_strong(n)


def primality_method(n: int) -> str:
    """Tag naming the tier that decides is_prime(n); recorded in run metadata.

    Above the deterministic range this additionally attempts (and caches) a
    Pocklington certificate, so audited elements get the strongest available
    label. Deterministic for a fixed n.
    """
    if n < MR13_LIMIT:
        return "mr13-deterministic"
    if not is_prime(n):
        return "composite-witness"
    if _certify_pocklington(n):
        return "bpsw+mr25+pocklington-certified"
    return "bpsw+mr25-fixed-bases"


def sigma_prime_power(q: int, k: int) -> int:
    """sigma(q^k) = 1 + q + ... + q^k for prime q, k >= 0."""
    if k < 0:
        raise ValueError("exponent must be nonnegative")
    if not is_prime(q):
        raise ValueError(f"sigma_prime_power requires a prime base, got {q}")
    return (q ** (k + 1) - 1) // (q - 1)


@dataclass(frozen=True)
class FactorBudget:
    """Deterministic work cap for factorize.

    trial_bound: largest prime used for trial division (capped at 10^6).
    rho_iterations: total Brent iterations allowed per factorize call.
    max_digits: inputs wider than this skip the splitting stage entirely
        (they are primality-checked and otherwise returned as the cofactor),
        mirroring the set-aside treatment of inconveniently large composites.
    """

    trial_bound: int = 1_000_000
    rho_iterations: int = 2_000_000
    max_digits: int | None = None

    def __post_init__(self) -> None:
        if self.trial_bound > _TRIAL_LIMIT:
            raise ValueError(f"trial_bound is capped at {_TRIAL_LIMIT}")
        if self.trial_bound < 2 or self.rho_iterations < 0:
            raise ValueError("invalid budget")


DEFAULT_BUDGET = FactorBudget()
SUCCESSOR_BUDGET = FactorBudget(rho_iterations=5_000_000)
_CERT_BUDGET = FactorBudget(rho_iterations=200_000)


@dataclass(frozen=True)
class Factorization:
    """factors: ascending (prime, exponent) pairs; cofactor 1 when complete.

    Invariant: product(p^e) * cofactor == the factored input, every listed
    prime passes is_prime, and the cofactor is never prime.
    """

    factors: tuple[tuple[int, int], ...]
    cofactor: int = 1

    @property
    def complete(self) -> bool:
        return self.cofactor == 1

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def value(self) -> int:
        out = self.cofactor
        for p, e in self.factors:
            out *= p ** e
        return out


def _trial_divide(n: int, bound: int) -> tuple[dict[int, int], int]:
    _ensure_tables()
    found: dict[int, int] = {}
    for start, prod in _blocks:
        if _small_primes[start] > bound:
            break
        g = math.gcd(n, prod)
        if g == 1:
            continue
        for p in _small_primes[start: start + _TRIAL_BLOCK]:
            if p > bound:
                break
            if g % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                if e:
                    found[p] = e
                while g % p == 0:
                    g //= p
                if g == 1:
                    break
        if n == 1:
            break
    return found, n


def _brent(n: int, c: int, max_iter: int) -> tuple[int | None, int]:
    """One Brent rho run f(x) = x^2 + c from x0 = 2; returns (factor, iters used)."""
    y, r, q = 2, 1, 1
    g = 1
    used = 0
    m = 128
    x = ys = y
    while g == 1 and used < max_iter:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        used += r
        k = 0
        while k < r and g == 1:
            ys = y
            lim = min(m, r - k)
            for _ in range(lim):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            used += lim
            g = math.gcd(q, n)
            k += m
        r <<= 1
    if g == n:
        # backtrack one step at a time
        g = 1
        while g == 1:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
            used += 1
            if used >= max_iter:
                return None, used
    if 1 < g < n:
        return g, used
    return None, used


def factorize(n: int, budget: FactorBudget = DEFAULT_BUDGET) -> Factorization:
    """Factor n under a deterministic work budget.

    Complete when the budget suffices (cofactor 1); otherwise a partial
    factorization whose cofactor is the product of the unsplit composite
    chunks. Budget exhaustion is never an error.
    """
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    if n == 1:
        return Factorization((), 1)
    if budget.max_digits is not None and n >= 10 ** budget.max_digits:
        if is_prime(n):
            return Factorization(((n, 1),), 1)
        return Factorization((), n)

    found, rest = _trial_divide(n, budget.trial_bound)
    stubborn: list[int] = []
    pending = [rest] if rest > 1 else []
    iters_left = budget.rho_iterations
    while pending:
        pending.sort(reverse=True)
        m = pending.pop()
        if is_prime(m):
            found[m] = found.get(m, 0) + 1
            continue
        # cheap perfect-power escape; rho converges poorly on p^k
        split = None
        for k in (2, 3, 5):
            r = _iroot(m, k)
            if r > 1 and r ** k == m:
                split = (r, m // r)
                break
        if split is None and iters_left > 0:
            for c in range(1, 30):
                f, used = _brent(m, c, iters_left)
                iters_left -= used
                if f is not None:
                    split = (f, m // f)
                    break
                if iters_left <= 0:
                    break
        if split is None:
            stubborn.append(m)
            continue
        pending.extend(split)

    cofactor = 1
    for m in stubborn:
        cofactor *= m
    factors = tuple(sorted(found.items()))
    return Factorization(factors, cofactor)


def odd_prime_divisors_of_successor(p: int) -> set[int]:
    """Odd primes dividing p + 1; complete by construction or an error.

    For an odd prime p, sigma(p^a) with odd a is divisible by p + 1, so every
    odd prime below also divides the ambient perfect-number candidate.
    """
    if p == 2 or not is_prime(p):
        raise ValueError(f"expected an odd prime, got {p}")
    fac = factorize(p + 1, SUCCESSOR_BUDGET)
    if not fac.complete:
        raise ArithmeticError(f"could not fully factor {p + 1} within budget")
    return {q for q in fac.primes if q != 2}
