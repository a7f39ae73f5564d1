"""Residue-class logic for chain membership, special-prime eligibility, and
exponent floors.

A prime can be the special prime of the Euler form only when it is 1 mod 12
and not 6 mod 7; a prime can appear in sigma chains only when it is 5 or
1 mod 5. Exponent floors: every confirmed divisor appears at least 4 times;
once a prime has five independent multiplicity sources its floor rises to 14
(residue 5 mod 6) or 24 (residue 1 mod 6), matching the relabeled exponent
families 10b+4 / 30c+4 / 30d+24.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arith import is_prime

__all__ = [
    "PrimeClass",
    "ExponentClass",
    "Case",
    "classify_prime",
    "is_special_candidate",
    "is_chain_admissible",
    "gamma_exponent",
    "special_prime_cases",
]


@dataclass(frozen=True)
class PrimeClass:
    prime: int
    mod5: int
    mod6: int
    mod7: int
    mod12: int
    special_candidate: bool
    chain_admissible: bool


@dataclass(frozen=True)
class ExponentClass:
    """Exponent floor bookkeeping for one confirmed divisor."""

    prime: int
    residue_mod6: int
    evidence_count: int
    gamma: int

    def __post_init__(self) -> None:
        if self.residue_mod6 not in (1, 5):
            raise ValueError("residue_mod6 must be 1 or 5")
        expected = gamma_exponent(self.prime, self.evidence_count)
        if self.gamma != expected:
            raise ValueError(f"gamma {self.gamma} inconsistent, expected {expected}")


@dataclass(frozen=True)
class Case:
    """One branch of the special-prime case split."""

    id: str
    p: int                      # the case's prime, or the least one for the open tail
    open_tail: bool             # True for the p >= 109 branch
    extras: tuple[int, ...]     # primes forced into the divisor set, floor 4
    bound_form: str             # "log" or "maclaurin"


def classify_prime(r: int) -> PrimeClass:
    """Full residue classification of an odd prime."""
    if r == 2 or not is_prime(r):
        raise ValueError(f"classify_prime requires an odd prime, got {r}")
    mod12 = r % 12
    mod7 = r % 7
    return PrimeClass(
        prime=r,
        mod5=r % 5,
        mod6=r % 6,
        mod7=mod7,
        mod12=mod12,
        special_candidate=(mod12 == 1 and mod7 != 6),
        chain_admissible=(r == 5 or r % 5 == 1),
    )


def is_special_candidate(r: int) -> bool:
    """True iff r could be the special prime (1 mod 12, not 6 mod 7)."""
    return r % 12 == 1 and r % 7 != 6


def is_chain_admissible(r: int) -> bool:
    """True iff r can appear in a sigma chain: r = 5 or r = 1 mod 5."""
    return r == 5 or r % 5 == 1


def gamma_exponent(r: int, evidence_count: int) -> int:
    """Exponent floor for a confirmed divisor with the given source count.

    Monotone in evidence_count, and depends only on (r mod 6, count >= 5).
    """
    if r in (2, 3):
        raise ValueError("no exponent floor for 2 or 3")
    if evidence_count < 0:
        raise ValueError("evidence_count must be nonnegative")
    if evidence_count < 5:
        return 4
    return 14 if r % 6 == 5 else 24


def special_prime_cases() -> list[Case]:
    """The four-way case split on the special prime p.

    The three finite cases force odd primes of p+1 into the divisor set; the
    open tail p >= 109 is bounded by the Maclaurin form evaluated at 109
    (both -ln(1+1/p)+1/p and 1/(2p^2) decrease in p).
    """
    return [
        Case(id="p=37", p=37, open_tail=False, extras=(19, 61), bound_form="log"),
        Case(id="p=61", p=61, open_tail=False, extras=(), bound_form="log"),
        Case(id="p=73", p=73, open_tail=False, extras=(37, 61), bound_form="log"),
        Case(id="p>=109", p=109, open_tail=True, extras=(61,), bound_form="maclaurin"),
    ]
