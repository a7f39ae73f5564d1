"""Directed-rounding bound machinery: the delta sum, per-case upper bounds on
the reciprocal sum, the running ledger, and the optimal-population sieves.

Every transcendental quantity is an outward-rounded interval (mpmath's
interval context, 50 significant digits by default). Claims of the form
"value exceeds c" are made with the lower endpoint, "value below c" with the
upper endpoint, so every printed conclusion is conservative. The sieves use
exact integer fixed-point arithmetic (scale 10^36) with floor/ceil division,
which is directed rounding by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath
from mpmath.ctx_iv import MPIntervalContext

from .classify import Case, is_special_candidate, special_prime_cases

__all__ = [
    "DirectedReal",
    "ReciprocalLedger",
    "CaseBound",
    "BoundReport",
    "SieveCount",
    "DEFAULT_DPS",
    "delta_term",
    "case_bound",
    "overall_bound",
    "cohen_holds",
    "optimal_count",
    "sigma_product_count",
    "empty_ledger",
    "ledger_update",
    "PUBLISHED_CASE_BOUNDS",
    "PUBLISHED_RECIPROCAL_BOUND_TABLE",
]

DEFAULT_DPS = 50

_contexts: dict[int, MPIntervalContext] = {}


def _ctx(dps: int) -> MPIntervalContext:
    ctx = _contexts.get(dps)
    if ctx is None:
        ctx = MPIntervalContext()
        ctx.dps = dps
        _contexts[dps] = ctx
    return ctx


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # accept floats by their printed decimal, not their binary expansion
        return Fraction(repr(value))
    return Fraction(str(value))


class DirectedReal:
    """Interval [lo, hi] guaranteed to contain the true value.

    Arithmetic widens outward; ln and exp come from the interval context.
    Construct via exact(), from_fraction(), from_decimal(), or arithmetic on
    existing values.
    """

    __slots__ = ("_iv", "_dps")

    def __init__(self, ival, dps: int):
        self._iv = ival
        self._dps = dps

    # --- constructors ---

    @classmethod
    def exact(cls, n: int, dps: int = DEFAULT_DPS) -> "DirectedReal":
        return cls(_ctx(dps).mpf(n), dps)

    @classmethod
    def from_fraction(cls, f: Fraction, dps: int = DEFAULT_DPS) -> "DirectedReal":
        ctx = _ctx(dps)
        return cls(ctx.mpf(f.numerator) / ctx.mpf(f.denominator), dps)

    @classmethod
    def from_decimal(cls, text: str, dps: int = DEFAULT_DPS) -> "DirectedReal":
        return cls.from_fraction(Fraction(text), dps)

    @classmethod
    def from_endpoints(cls, lo, hi, dps: int = DEFAULT_DPS) -> "DirectedReal":
        return cls(_ctx(dps).mpf((lo, hi)), dps)

    # --- endpoints ---

    @property
    def dps(self) -> int:
        return self._dps

    @property
    def lo(self) -> mpmath.mpf:
        return mpmath.mpf(self._iv._mpi_[0])

    @property
    def hi(self) -> mpmath.mpf:
        return mpmath.mpf(self._iv._mpi_[1])

    def lo_fraction(self) -> Fraction:
        num, den = mpmath.libmp.to_rational(self._iv._mpi_[0])
        return Fraction(int(num), int(den))

    def hi_fraction(self) -> Fraction:
        num, den = mpmath.libmp.to_rational(self._iv._mpi_[1])
        return Fraction(int(num), int(den))

    def endpoints_raw(self) -> tuple[tuple, tuple]:
        """Exact binary endpoint tuples, for serialization."""
        a, b = self._iv._mpi_
        return (tuple(int(x) for x in a), tuple(int(x) for x in b))

    @classmethod
    def from_raw(cls, raw, dps: int = DEFAULT_DPS) -> "DirectedReal":
        """Rebuild from endpoints_raw() output without any re-rounding, so a
        restored value continues bit-identically."""
        ctx = _ctx(dps)
        proto = ctx.mpf(0)
        ival = object.__new__(type(proto))
        ival._mpi_ = (
            tuple(int(x) for x in raw[0]),
            tuple(int(x) for x in raw[1]),
        )
        return cls(ival, dps)

    # --- arithmetic ---

    def _coerce(self, other) -> "DirectedReal":
        if isinstance(other, DirectedReal):
            if other._dps != self._dps:
                raise ValueError("mixed-precision interval arithmetic")
            return other
        if isinstance(other, int):
            return DirectedReal.exact(other, self._dps)
        if isinstance(other, Fraction):
            return DirectedReal.from_fraction(other, self._dps)
        raise TypeError(f"cannot mix DirectedReal with {type(other).__name__}")

    def __add__(self, other):
        o = self._coerce(other)
        return DirectedReal(self._iv + o._iv, self._dps)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return DirectedReal(self._iv - o._iv, self._dps)

    def __rsub__(self, other):
        o = self._coerce(other)
        return DirectedReal(o._iv - self._iv, self._dps)

    def __mul__(self, other):
        o = self._coerce(other)
        return DirectedReal(self._iv * o._iv, self._dps)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return DirectedReal(self._iv / o._iv, self._dps)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return DirectedReal(o._iv / self._iv, self._dps)

    def __neg__(self):
        return DirectedReal(-self._iv, self._dps)

    def ln(self) -> "DirectedReal":
        return DirectedReal(_ctx(self._dps).log(self._iv), self._dps)

    def exp(self) -> "DirectedReal":
        return DirectedReal(_ctx(self._dps).exp(self._iv), self._dps)

    # --- conservative comparisons ---

    def exceeds(self, c) -> bool:
        """True only if the whole interval lies above c (lo > c)."""
        return self.lo_fraction() > _to_fraction(c)

    def at_least(self, c) -> bool:
        return self.lo_fraction() >= _to_fraction(c)

    def below(self, c) -> bool:
        """True only if the whole interval lies below c (hi < c)."""
        return self.hi_fraction() < _to_fraction(c)

    def contains(self, c) -> bool:
        f = _to_fraction(c)
        return self.lo_fraction() <= f <= self.hi_fraction()

    def nested_in(self, other: "DirectedReal") -> bool:
        return (other.lo_fraction() <= self.lo_fraction()
                and self.hi_fraction() <= other.hi_fraction())

    def width(self) -> Fraction:
        return self.hi_fraction() - self.lo_fraction()

    def midpoint(self) -> float:
        return float((self.lo + self.hi) / 2)

    def __repr__(self) -> str:
        return f"DirectedReal[{mpmath.nstr(self.lo, 12)}, {mpmath.nstr(self.hi, 12)}]"


def interval_max(values: Iterable[DirectedReal]) -> DirectedReal:
    vals = list(values)
    if not vals:
        raise ValueError("interval_max of nothing")
    dps = vals[0].dps
    lo = max(v.lo for v in vals)
    hi = max(v.hi for v in vals)
    return DirectedReal.from_endpoints(lo, hi, dps)


# ---------------------------------------------------------------------------
# delta terms and case bounds


def delta_term(q: int, gamma: int, dps: int = DEFAULT_DPS) -> DirectedReal:
    """ln(1 + 1/q + ... + 1/q^gamma) - 1/q as an interval; strictly positive."""
    if q < 5:
        raise ValueError("delta terms start at q = 5")
    if gamma not in (4, 14, 24):
        raise ValueError("gamma must be one of 4, 14, 24")
    ctx = _ctx(dps)
    one = ctx.mpf(1)
    term = one
    total = one
    for _ in range(gamma):
        term = term / q
        total = total + term
    out = DirectedReal(ctx.log(total) - one / q, dps)
    return out


def _gamma_map(tset) -> dict[int, int]:
    if hasattr(tset, "gamma_map"):
        return dict(tset.gamma_map())
    if isinstance(tset, Mapping):
        return dict(tset)
    raise TypeError("tset must be a TSet or a {prime: gamma} mapping")


_PREREQUISITES = (5, 11, 31, 41, 71, 101, 131, 151, 181, 191, 211)


@dataclass(frozen=True)
class CaseBound:
    case_id: str
    p: int
    delta: DirectedReal
    bound: DirectedReal


@dataclass(frozen=True)
class BoundReport:
    cases: tuple[CaseBound, ...]
    overall: DirectedReal

    def case(self, case_id: str) -> CaseBound:
        for cb in self.cases:
            if cb.case_id == case_id:
                return cb
        raise KeyError(case_id)


def case_bound(case: Case, tset, dps: int = DEFAULT_DPS) -> CaseBound:
    """Upper bound on the reciprocal sum of all prime divisors under one case.

    Delta sums over the confirmed divisors plus the case's forced extras.
    Special candidates enter only when the case assumption rules them out as
    the special prime (finite case: q != p; open tail: q < 109), and always at
    floor 4 since their own component could be Eulerian otherwise. The log
    form is ln2 - Delta - ln(1+1/p) + 1/p; the open tail uses the Maclaurin
    weakening ln2 - Delta + 1/(2 p^2) at its least prime so one number covers
    every larger p.
    """
    gammas = _gamma_map(tset)
    missing = [q for q in _PREREQUISITES if q not in gammas]
    if missing:
        raise ValueError(f"tset lacks prerequisite members: {missing}")

    contributions: dict[int, int] = {}
    for q, g in gammas.items():
        if is_special_candidate(q):
            if case.open_tail:
                if q >= case.p:
                    continue
            elif q == case.p:
                continue
            contributions[q] = 4
        else:
            contributions[q] = g
    for e in case.extras:
        contributions.setdefault(e, 4)

    ctx = _ctx(dps)
    delta = DirectedReal(ctx.mpf(0), dps)
    for q in sorted(contributions):
        delta = delta + delta_term(q, contributions[q], dps)

    ln2 = DirectedReal(ctx.log(ctx.mpf(2)), dps)
    p = case.p
    if case.bound_form == "log":
        one_over_p = DirectedReal.from_fraction(Fraction(1, p), dps)
        ln_term = (DirectedReal.exact(1, dps) + one_over_p).ln()
        bound = ln2 - delta - ln_term + one_over_p
    else:
        tail = DirectedReal.from_fraction(Fraction(1, 2 * p * p), dps)
        bound = ln2 - delta + tail
    return CaseBound(case_id=case.id, p=p, delta=delta, bound=bound)


def overall_bound(tset, dps: int = DEFAULT_DPS) -> BoundReport:
    """All four case bounds; overall is the interval max (hi end governs)."""
    cases = tuple(case_bound(c, tset, dps) for c in special_prime_cases())
    return BoundReport(cases=cases, overall=interval_max(cb.bound for cb in cases))


# Previously published digit strings for this configuration. The p=73 row is
# not reproduced by the formula as specified here (computed ~0.6641125 with
# extras {37, 61} in Delta, ~0.6644845 without 37); it is reported alongside
# the computed value, never asserted.
PUBLISHED_CASE_BOUNDS = {
    "p=37": "0.6633150",
    "p=61": "0.6646602",
    "p=73": "0.6644488",
    "p>=109": "0.6644335",
}

# Reference reciprocal-sum bounds for odd perfect numbers by divisibility
# class, kept as documentation constants only. The last row label repeats the
# second's in the source table; stored verbatim.
PUBLISHED_RECIPROCAL_BOUND_TABLE = (
    ("3 does not divide N, 5 divides N", "0.647649", "0.677637"),
    ("3 does not divide N, 5 does not divide N", "0.667472", "0.693148"),
    ("3 divides N, 5 divides N", "0.596063", "0.673634"),
    ("3 does not divide N, 5 does not divide N", "0.604707", "0.657304"),
)


def cohen_holds(x, dps: int = DEFAULT_DPS) -> bool:
    """Checked guard for the truncation step: 1 + x + x^2 > exp(x) on (0, 1/3].

    Evaluated with directed rounding: the exact rational left side must beat
    the upper endpoint of exp(x).
    """
    fx = _to_fraction(x)
    if not (0 < fx <= Fraction(1, 3)):
        raise ValueError("cohen_holds is defined on (0, 1/3]")
    lhs = 1 + fx + fx * fx
    rhs = DirectedReal.from_fraction(fx, dps).exp()
    return lhs > rhs.hi_fraction()


# ---------------------------------------------------------------------------
# reciprocal ledger


@dataclass(frozen=True)
class ReciprocalLedger:
    """Running sum of 1/q over the confirmed divisor set, as an interval."""

    sum: DirectedReal
    count: int
    members: frozenset[int]


def empty_ledger(dps: int = DEFAULT_DPS) -> ReciprocalLedger:
    return ReciprocalLedger(sum=DirectedReal.exact(0, dps), count=0, members=frozenset())


def ledger_update(ledger: ReciprocalLedger, q: int) -> ReciprocalLedger:
    """Widen the ledger by exactly 1/q; double insertion is an error."""
    if q in ledger.members:
        raise ValueError(f"{q} already counted in the ledger")
    inc = DirectedReal.from_fraction(Fraction(1, q), ledger.sum.dps)
    return ReciprocalLedger(
        sum=ledger.sum + inc,
        count=ledger.count + 1,
        members=ledger.members | {q},
    )


# ---------------------------------------------------------------------------
# optimal-population sieves

_SCALE = 10 ** 36


def _admissible_population(limit: int) -> list[int]:
    """5 and every prime = 1 mod 5 below limit, ascending."""
    import numpy as np

    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(limit ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p:: p] = False
    primes = np.flatnonzero(sieve)
    out = [5]
    out.extend(int(q) for q in primes[primes % 5 == 1])
    return out


@dataclass(frozen=True)
class SieveCount:
    count: int
    threshold: int
    attained: DirectedReal  # value of the sum/product at the crossing


def optimal_count(bound, dps: int = DEFAULT_DPS) -> SieveCount:
    """Primes needed before the reciprocal sum of the admissible population
    reaches the bound.

    Accumulates 1/q over 5 and the 1 mod 5 primes ascending in exact directed
    fixed point, stopping once the lower bound of the sum reaches the exact
    decimal target. threshold is the largest prime pulled in, so the counted
    set is exactly 5 plus the admissible primes up to and including it.
    """
    target = _to_fraction(bound)
    if not (0 < target < 1):
        raise ValueError("bound must lie in (0, 1)")
    limit = 1 << 23
    while True:
        pop = _admissible_population(limit)
        lo = 0
        hi = 0
        for i, q in enumerate(pop):
            lo += _SCALE // q
            hi += -(-_SCALE // q)
            if lo * target.denominator >= target.numerator * _SCALE:
                attained = DirectedReal.from_endpoints(
                    mpmath.mpf(lo) / _SCALE, mpmath.mpf(hi) / _SCALE, dps)
                return SieveCount(count=i + 1, threshold=q, attained=attained)
        limit *= 2


def sigma_product_count(dps: int = DEFAULT_DPS) -> SieveCount:
    """Primes needed before the abundancy product of the admissible population
    strictly exceeds 2.

    Each prime enters at its unconditional multiplicity floor: 14 for the seed
    prime 5 (its even exponent is 4 mod 10 and at least 5, hence at least 14)
    and 4 for everything else. Exact directed fixed point, crossing judged on
    the lower bound.
    """
    limit = 1 << 23
    while True:
        pop = _admissible_population(limit)
        plo = _SCALE
        phi = _SCALE
        for i, q in enumerate(pop):
            e = 14 if q == 5 else 4
            sig = (q ** (e + 1) - 1) // (q - 1)
            qe = q ** e
            plo = plo * sig // qe
            phi = -(-phi * sig // qe)
            if plo > 2 * _SCALE:
                attained = DirectedReal.from_endpoints(
                    mpmath.mpf(plo) / _SCALE, mpmath.mpf(phi) / _SCALE, dps)
                return SieveCount(count=i + 1, threshold=q, attained=attained)
        limit *= 2
