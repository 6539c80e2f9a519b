"""Exact bookkeeping for expressed building blocks in the sequence model.

Setting: one building block is already expressed in a tree; the remaining
n_l - 1 leaves are filled uniformly from the 2m terminals (m complementary
pairs). A further block counts as expressed when either member of its pair
occurs at least once among those leaves. This module computes the number of
leaf sequences expressing exactly i additional blocks, the matching
probabilities, and the mean/variance of the expressed count — all with exact
integer arithmetic where the leaf count is an integer, plus a brute-force
enumeration oracle for cross-checking the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb

ENUMERATION_GUARD = 10**7


@dataclass(frozen=True)
class ExpressionDistribution:
    """Distribution of the number of additionally expressed blocks.

    ``counts`` holds exact sequence counts when the leaf count is an integer
    (None for fractional leaf counts, where only probabilities exist).
    """

    m: int
    n_l: float
    probs: tuple[float, ...]  # index i = 0 .. m-1
    mean: float
    variance: float
    counts: tuple[int, ...] | None = None


def _check_args(m: int, n_l: float) -> None:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if n_l < 1:
        raise ValueError(f"n_l must be >= 1, got {n_l}")


def n_total(m: int, n_l: int) -> int:
    """Total terminal sequences on the n_l - 1 free leaves: (2m)**(n_l - 1)."""
    _check_args(m, n_l)
    return (2 * m) ** (n_l - 1)


def ways_expressed(i: int, m: int, n_l: int) -> int:
    """Exact count of sequences expressing exactly i additional blocks.

    Inclusion-exclusion: choose the i pairs, then alternate over how many of
    them are missing, each remaining choice contributing a factor
    2*(i - j + 1) per leaf (the chosen pairs' symbols plus the already
    expressed pair's two symbols).
    """
    _check_args(m, n_l)
    if not 0 <= i <= m - 1:
        raise ValueError(f"i must lie in [0, {m - 1}], got {i}")
    acc = 0
    for j in range(i + 1):
        term = comb(i, j) * (2 * (i - j + 1)) ** (n_l - 1)
        acc += -term if j & 1 else term
    return comb(m - 1, i) * acc


def prob_expressed(i: int, m: int, n_l: int) -> float:
    """P(exactly i additional blocks expressed), as the exact count ratio.

    The alternating floating-point form (prob_expressed_float) cancels badly
    for large n_l; the integer path does not, so it is the default.
    """
    return float(Fraction(ways_expressed(i, m, n_l), n_total(m, n_l)))


def prob_expressed_float(i: int, m: int, n_l: float) -> float:
    """Same probability via the floating alternating sum; accepts fractional
    leaf counts (used when n_l is a measured population mean)."""
    _check_args(m, n_l)
    if not 0 <= i <= m - 1:
        raise ValueError(f"i must lie in [0, {m - 1}], got {i}")
    acc = 0.0
    for j in range(i + 1):
        term = comb(i, j) * ((i - j + 1) / m) ** (n_l - 1)
        acc += -term if j & 1 else term
    return comb(m - 1, i) * acc


def mean_var_expressed(m: int, n_l: float) -> ExpressionDistribution:
    """Distribution, mean and variance of the expressed count.

    Integer n_l uses exact counts throughout; fractional n_l (a measured
    average leaf count) falls back to the floating form.
    """
    _check_args(m, n_l)
    if float(n_l).is_integer():
        n_l = int(n_l)
        tot = n_total(m, n_l)
        counts = tuple(ways_expressed(i, m, n_l) for i in range(m))
        mean = Fraction(sum(i * c for i, c in enumerate(counts)), tot)
        second = Fraction(sum(i * i * c for i, c in enumerate(counts)), tot)
        return ExpressionDistribution(
            m=m,
            n_l=n_l,
            probs=tuple(float(Fraction(c, tot)) for c in counts),
            mean=float(mean),
            variance=float(second - mean * mean),
            counts=counts,
        )
    probs = [max(prob_expressed_float(i, m, n_l), 0.0) for i in range(m)]
    mean_f = sum(i * p for i, p in enumerate(probs))
    second_f = sum(i * i * p for i, p in enumerate(probs))
    return ExpressionDistribution(
        m=m, n_l=n_l, probs=tuple(probs), mean=mean_f, variance=second_f - mean_f**2
    )


def q_bar_order(m: int, n_l: float) -> float:
    """Mean expressed blocks per tree, counting the anchor block itself."""
    return 1.0 + mean_var_expressed(m, n_l).mean


def oracle_enumerate(m: int, n_l: int) -> ExpressionDistribution:
    """Brute-force reference: walk every terminal sequence and count expressed
    pair indices directly. Refuses above ENUMERATION_GUARD sequences."""
    _check_args(m, n_l)
    total = (2 * m) ** (n_l - 1)
    if total > ENUMERATION_GUARD:
        raise ValueError(
            f"enumeration of {total} sequences exceeds guard {ENUMERATION_GUARD}"
        )
    counts = [0] * m
    for seq in product(range(2 * m), repeat=n_l - 1):
        mask = 0
        for sym in seq:
            mask |= 1 << (sym >> 1)
        counts[(mask >> 1).bit_count()] += 1  # bit 0 is the anchor pair
    mean = Fraction(sum(i * c for i, c in enumerate(counts)), total)
    second = Fraction(sum(i * i * c for i, c in enumerate(counts)), total)
    return ExpressionDistribution(
        m=m,
        n_l=n_l,
        probs=tuple(float(Fraction(c, total)) for c in counts),
        mean=float(mean),
        variance=float(second - mean * mean),
        counts=tuple(counts),
    )
