"""Uniform measures on monotone triangles with a fixed top row, and exact
checks of the counting estimates used for tightness.

A *constrained chain* is the diagonal x_i = mu^i_i of a triangle once the
entries A_i = mu^{i+1}_i right below the diagonal are fixed. Given the A's,
the diagonal is uniform on

    x_1 <= x_2 <= ... <= x_m <= B,   x_i >= A_i,   x_i > A_{i-1} (i >= 2),

the last family coming from strictness of row i. It only bites when
A_{i-1} = A_i.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import accumulate
from typing import Optional, Sequence

from .core import MonotoneTriangle
from .enumerate import _check_row, bottom_law, count_patterns, interlacing_rows
from .errors import PreconditionViolated


# ---------------------------------------------------------------------------
# conditional uniform sampling on triangles with a given top row


@lru_cache(maxsize=200_000)
def _choices(row: tuple[int, ...]):
    rows = list(interlacing_rows(row))
    cum = list(accumulate(count_patterns(mu) for mu in rows))
    return rows, cum


def _as_rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def sample_conditional(lam: Sequence[int], seed=None) -> MonotoneTriangle:
    """Exactly uniform triangle with top row ``lam``.

    Rows are drawn top-down, each candidate weighted by the number of
    triangles below it; selection uses exact integer arithmetic.
    """
    lam = _check_row(lam)
    rng = _as_rng(seed)
    rows = [lam]
    row = lam
    while len(row) > 1:
        cands, cum = _choices(row)
        row = cands[bisect_right(cum, rng.randrange(cum[-1]))]
        rows.append(row)
    return MonotoneTriangle(tuple(reversed(rows)))


def sample_conditional_many(lam: Sequence[int], count: int, seed=None) -> list[MonotoneTriangle]:
    rng = _as_rng(seed)
    return [sample_conditional(lam, rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# constrained chains


def _lower_bounds(A: Sequence[int]) -> list[int]:
    return [A[0]] + [max(A[i], A[i - 1] + 1) for i in range(1, len(A))]


def _check_chain_args(A, B) -> tuple[tuple[int, ...], int]:
    A = tuple(int(a) for a in A)
    if any(a > b for a, b in zip(A, A[1:])):
        raise PreconditionViolated(f"A = {A} is not weakly increasing")
    return A, int(B)


@dataclass(frozen=True)
class ConstrainedChain:
    A: tuple[int, ...]
    B: int
    values: tuple[int, ...]

    def is_valid(self) -> bool:
        x = self.values
        if len(x) != len(self.A):
            return False
        if any(a > b for a, b in zip(x, x[1:])) or (x and x[-1] > self.B):
            return False
        return all(v >= lb for v, lb in zip(x, _lower_bounds(self.A)))

    @classmethod
    def from_triangle(cls, t: MonotoneTriangle) -> "ConstrainedChain":
        r = t.rows
        n = t.n
        A = tuple(r[i][i - 1] for i in range(1, n))
        return cls(A, r[-1][-1], tuple(r[i][i] for i in range(n - 1)))


def count_s(A: Sequence[int], B: int) -> int:
    """Number of chains x_1 <= ... <= x_m <= B with x_i >= A_i and x_i > A_{i-1}."""
    A, B = _check_chain_args(A, B)
    if not A:
        return 1
    return sum(first_value_law(A, B).values())


def first_value_law(A: Sequence[int], B: int) -> dict[int, int]:
    """Counts of admissible chains keyed by the value of x_1."""
    A, B = _check_chain_args(A, B)
    lbs = _lower_bounds(A)
    if any(lb > B for lb in lbs):
        return {}
    # g[v] = number of completions x_i..x_m given x_i = v, for v in [lbs[i], B]
    g = {v: 1 for v in range(lbs[-1], B + 1)}
    for i in range(len(A) - 2, -1, -1):
        suffix, acc = {}, 0
        for v in range(B, lbs[i] - 1, -1):
            acc += g.get(v, 0)
            suffix[v] = acc
        nxt_lb = lbs[i + 1]
        g = {v: suffix[max(v, nxt_lb)] for v in range(lbs[i], B + 1)}
    return {v: c for v, c in sorted(g.items()) if c}


@dataclass
class TopLaw:
    support: list[int]
    probabilities: list[Fraction]

    @property
    def nondecreasing(self) -> bool:
        p = self.probabilities
        return all(a <= b for a, b in zip(p, p[1:]))

    def tail_mass(self, threshold: float) -> Fraction:
        return sum((p for k, p in zip(self.support, self.probabilities) if k >= threshold), Fraction(0))


def conditional_top_law(A: Sequence[int], B: int) -> TopLaw:
    """Exact law of x_m over k = A_m..B: S(m-1; A_1..A_{m-1}; k) / S(m; A; B), zero where x_m = k is inadmissible."""
    A, B = _check_chain_args(A, B)
    if not A:
        raise PreconditionViolated("chain must have at least one variable")
    if B < A[-1]:
        raise PreconditionViolated(f"B = {B} is below A_m = {A[-1]}")
    total = count_s(A, B)
    if total == 0:
        raise PreconditionViolated("no admissible chain")
    lb = _lower_bounds(A)[-1]
    support = list(range(A[-1], B + 1))
    probs = [Fraction(count_s(A[:-1], k) if k >= lb else 0, total) for k in support]
    return TopLaw(support, probs)


@dataclass
class MonotonicityReport:
    A: tuple[int, ...]
    B: int
    A_prime: tuple[int, ...]
    B_prime: int
    s: int
    s_prime: int

    @property
    def holds(self) -> bool:
        return self.s <= self.s_prime

    def as_dict(self) -> dict:
        return {
            "A": list(self.A), "B": self.B, "A_prime": list(self.A_prime), "B_prime": self.B_prime,
            "S": self.s, "S_prime": self.s_prime, "holds": self.holds,
        }


def verify_monotonicity(A, A_prime, B, B_prime) -> MonotonicityReport:
    """Check S(A; B) <= S(A'; B') for A' <= A componentwise and B' >= B."""
    A, B = _check_chain_args(A, B)
    A_prime, B_prime = _check_chain_args(A_prime, B_prime)
    if len(A) != len(A_prime):
        raise PreconditionViolated("A and A' must have equal length")
    if any(ap > a for a, ap in zip(A, A_prime)) or B_prime < B:
        raise PreconditionViolated("need A'_i <= A_i for all i and B' >= B")
    return MonotonicityReport(A, B, A_prime, B_prime, count_s(A, B), count_s(A_prime, B_prime))


@dataclass
class EstimateReport:
    """Exact probabilities for the lower and upper estimates on x_1."""

    A: tuple[int, ...]
    B: int
    lower_threshold: Fraction
    upper_threshold: Fraction
    p_lower: Fraction
    p_upper: Fraction
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.p_lower >= self.bound and self.p_upper >= self.bound

    def as_dict(self) -> dict:
        return {
            "A": list(self.A), "B": self.B,
            "p_lower": float(self.p_lower), "lower_threshold": float(self.lower_threshold),
            "p_upper": float(self.p_upper), "upper_threshold": float(self.upper_threshold),
            "bound": float(self.bound), "holds": self.holds,
        }


def chain_estimates(A: Sequence[int], B: int) -> EstimateReport:
    """With N = m + 1: P(x_1 <= A_1 + (B - A_1)/2^N) and P(x_1 >= A_1 + (B - A_1)/2^(N-1)), both against 2^(-N-1)."""
    A, B = _check_chain_args(A, B)
    law = first_value_law(A, B)
    if not law:
        raise PreconditionViolated("no admissible chain")
    total = sum(law.values())
    N = len(A) + 1
    spread = B - A[0]
    lo_t = A[0] + Fraction(spread, 2 ** N)
    hi_t = A[0] + Fraction(spread, 2 ** (N - 1))
    p_lo = Fraction(sum(c for v, c in law.items() if v <= lo_t), total)
    p_hi = Fraction(sum(c for v, c in law.items() if v >= hi_t), total)
    return EstimateReport(A, B, lo_t, hi_t, p_lo, p_hi, Fraction(1, 2 ** (N + 1)))


# ---------------------------------------------------------------------------
# tightness bound for the bottom entry


def outside_probability(law: dict[int, int], c: float, radius: float) -> Fraction:
    total = sum(law.values())
    return Fraction(sum(w for x, w in law.items() if abs(x - c) > radius), total)


def worst_center(law: dict[int, int], radius) -> tuple[Fraction, float]:
    """min over real c of P(|X - c| > radius), attained with the closed window [x, x + 2 radius] at a support point."""
    total = sum(law.values())
    xs = sorted(law)
    best, best_x = -1, xs[0]
    for x in xs:
        mass = sum(law[y] for y in xs if x <= y <= x + 2 * radius)
        if mass > best:
            best, best_x = mass, x
    return Fraction(total - best, total), best_x + radius


def default_min_spread(N: int) -> int:
    return 4 * N * math.factorial(N)


@dataclass
class TightnessReport:
    lam: tuple[int, ...]
    c: Optional[float]
    status: str
    radius: float = 0.0
    bound: float = 0.0
    probability: Optional[float] = None
    margin: float = 0.0
    mode: str = "exact"
    samples: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> Optional[bool]:
        if self.status == "not-applicable":
            return None
        return self.probability >= self.bound - self.margin

    def as_dict(self) -> dict:
        d = {
            "lambda": list(self.lam), "c": self.c, "status": self.status, "radius": self.radius,
            "bound": self.bound, "probability": self.probability, "margin": self.margin,
            "mode": self.mode, "samples": self.samples, "passed": self.passed,
        }
        d.update(self.extras)
        return d


def verify_tightness(
    lam: Sequence[int],
    c: Optional[float] = None,
    samples: Optional[int] = None,
    seed=None,
    min_spread: Optional[int] = None,
    exact_row_limit: int = 6,
) -> TightnessReport:
    """Compare P(|mu^1_1 - c| > L / (2 N!)) with 2^(-N-1) under the uniform triangle with top row ``lam``.

    ``c=None`` takes the worst real c. The probability is exact (by
    counting) unless ``samples`` is given or the row is longer than
    ``exact_row_limit``; Monte Carlo estimates get a three-sigma margin.
    Spreads below ``min_spread`` (default 4 N N!) are evaluated but marked.
    """
    lam = _check_row(lam)
    N = len(lam)
    L = lam[-1] - lam[0]
    if N < 2 or L == 0:
        return TightnessReport(lam, c, "not-applicable")
    min_spread = default_min_spread(N) if min_spread is None else min_spread
    status = "ok" if L >= min_spread else "below-threshold"
    radius = L / (2 * math.factorial(N))
    bound = 2.0 ** (-N - 1)
    if samples is None and N <= exact_row_limit:
        law = bottom_law(lam)
        if c is None:
            p, c_used = worst_center(law, radius)
        else:
            p, c_used = outside_probability(law, c, radius), c
        return TightnessReport(lam, c_used, status, radius, bound, float(p), 0.0, "exact",
                               extras={"probability_exact": str(p)})
    samples = 10_000 if samples is None else samples
    rng = _as_rng(seed)
    draws = [sample_conditional(lam, rng).rows[0][0] for _ in range(samples)]
    law = {}
    for x in draws:
        law[x] = law.get(x, 0) + 1
    if c is None:
        p, c_used = worst_center(law, radius)
    else:
        p, c_used = outside_probability(law, c, radius), c
    margin = 3.0 * math.sqrt(bound * (1 - bound) / samples)
    return TightnessReport(lam, c_used, status, radius, bound, float(p), margin, "monte-carlo", samples)
