"""Population-sizing formulas for decision making between building blocks.

Collects the GA baseline, the supply bound, the general tree-GP model and its
per-problem instantiations, and the confidence coefficient c = z**2(alpha).
All sizing functions return real-valued sizes; callers round up (the harness
rounds up to even so crossover pairs cleanly).

Three routes to c are provided because they genuinely disagree:

* EXACT inverts the one-sided normal tail, c = (Phi^-1(1 - alpha))**2.
* PAPER_TAIL numerically solves alpha = exp(-c/2) / sqrt(2 c).
* TABLE_FIT numerically solves exp(-c/2) / sqrt(2 pi c) = 2 alpha, the rule
  that reproduces the published coefficient table (0.97, 1.76, 2.71, 3.77,
  4.89 for alpha = 1/8 ... 1/128) to within 0.01. Neither EXACT nor
  PAPER_TAIL matches that table.

Use TABLE_FIT to reproduce published numbers, EXACT for new predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from statistics import NormalDist

from .combinatorics import q_bar_order

_NORMAL = NormalDist()


class SizingError(ValueError):
    """Inputs outside a sizing formula's domain."""


class CMethod(str, Enum):
    EXACT = "exact"
    PAPER_TAIL = "paper_tail"
    TABLE_FIT = "table_fit"


def _solve_decreasing(f, target: float, lo: float = 1e-12, hi: float = 400.0) -> float:
    # f must be strictly decreasing on (lo, hi)
    if not (f(hi) <= target <= f(lo)):
        raise SizingError(f"no root in bracket [{lo}, {hi}] for target {target}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def c_from_alpha(alpha: float, method: CMethod = CMethod.TABLE_FIT) -> float:
    """Confidence coefficient c for decision-error tolerance alpha."""
    if not 0.0 < alpha < 0.5:
        raise SizingError(f"alpha must lie in (0, 0.5), got {alpha}")
    method = CMethod(method)
    if method is CMethod.EXACT:
        z = _NORMAL.inv_cdf(1.0 - alpha)
        return z * z
    if method is CMethod.PAPER_TAIL:
        return _solve_decreasing(lambda c: math.exp(-c / 2.0) / math.sqrt(2.0 * c), alpha)
    return _solve_decreasing(
        lambda c: math.exp(-c / 2.0) / math.sqrt(2.0 * math.pi * c), 2.0 * alpha
    )


def decision_probability(d: float, sigma2_h1: float, sigma2_h2: float) -> float:
    """P(single comparison picks the better block): Phi of the signal/noise ratio.

    With zero total variance the distribution degenerates; the limit is 1 for
    positive signal, 1/2 at zero signal.
    """
    if sigma2_h1 < 0 or sigma2_h2 < 0:
        raise SizingError("variances must be nonnegative")
    noise = sigma2_h1 + sigma2_h2
    if noise == 0.0:
        return 1.0 if d > 0 else (0.5 if d == 0 else 0.0)
    return _NORMAL.cdf(d / math.sqrt(noise))


def ga_popsize(c: float, chi: int, k: int, m: int, sigma2_bb: float, d: float) -> float:
    """Fixed-length GA sizing: n = 2 c chi**k (m - 1) sigma2_bb / d**2."""
    if m < 2:
        raise SizingError(f"need m >= 2 competing-block positions, got {m}")
    if d == 0:
        raise SizingError("signal d must be nonzero")
    return 2.0 * c * chi**k * (m - 1) * sigma2_bb / d**2


def supply_popsize(lam: float, k: int, kappa: float, epsilon: float) -> float:
    """Supply bound: n = (1/lam) 2**k kappa (ln kappa - ln epsilon).

    Natural logarithm. epsilon = kappa is the zero-error-margin boundary and
    yields 0.
    """
    if lam <= 0:
        raise SizingError("average tree size must be positive")
    if k < 1 or kappa < 1:
        raise SizingError("need k >= 1 and kappa >= 1")
    if not 0.0 < epsilon <= kappa:
        raise SizingError(f"supply error must lie in (0, kappa], got {epsilon}")
    return (1.0 / lam) * 2**k * kappa * (math.log(kappa) - math.log(epsilon))


@dataclass(frozen=True)
class SizingInputs:
    """Symbol bundle consumed by the general GP sizing forms.

    Only the fields a given formula uses need to be set; the rest may stay
    None. q_bar counts expressed blocks per tree (the noise sources), p_expr
    is the probability a present block is expressed, phi the expected
    fragment instances per tree, c_k the bloat multiple of the most compact
    solution size (lam = c_k * lambda_k context) and m_k its block count.
    """

    c: float
    sigma2_bb: float
    d: float
    kappa: float
    q_bar: float | None = None
    p_expr: float | None = None
    phi: float | None = None
    k: int | None = None
    lam: float | None = None
    c_k: float | None = None
    m_k: float | None = None

    def __post_init__(self):
        if self.d <= 0:
            raise SizingError("signal d must be positive")
        if self.sigma2_bb < 0:
            raise SizingError("sigma2_bb must be nonnegative")
        if self.kappa < 1:
            raise SizingError("competition size kappa must be >= 1")
        if self.p_expr is not None and not 0.0 <= self.p_expr <= 1.0:
            raise SizingError("p_expr must lie in [0, 1]")


def _require(si: SizingInputs, *names: str) -> None:
    missing = [n for n in names if getattr(si, n) is None]
    if missing:
        raise SizingError(f"sizing inputs missing {missing}")


def gp_popsize_general(si: SizingInputs) -> float:
    """General decision-making model:
    n = 2 c (sigma2/d**2) kappa [q_bar - 1] / (p_expr phi)."""
    _require(si, "q_bar", "p_expr", "phi")
    if si.q_bar <= 1.0:
        raise SizingError("q_bar must exceed 1 (no collateral noise otherwise)")
    if si.p_expr <= 0.0 or si.phi <= 0.0:
        raise SizingError("p_expr and phi must be positive")
    return (
        2.0 * si.c * (si.sigma2_bb / si.d**2) * si.kappa * (si.q_bar - 1.0)
        / (si.p_expr * si.phi)
    )


def gp_popsize_kolmogorov(si: SizingInputs) -> float:
    """Compact-solution form, with q_bar = c_k m_k and phi = 2**-k lam folded in:
    n = c (sigma2/d**2) kappa (c_k m_k - 1) 2**(k+1) / (p_expr lam)."""
    _require(si, "c_k", "m_k", "k", "p_expr", "lam")
    if si.lam <= 0:
        raise SizingError("average tree size must be positive")
    if si.p_expr <= 0.0:
        raise SizingError("p_expr must be positive")
    if si.c_k * si.m_k < 1.0:
        raise SizingError("c_k * m_k must be >= 1")
    return (
        si.c * (si.sigma2_bb / si.d**2) * si.kappa * (si.c_k * si.m_k - 1.0)
        * 2 ** (si.k + 1) / (si.p_expr * si.lam)
    )


def trials_per_bb(si: SizingInputs, n: float) -> float:
    """Expected trials of one block in a population of n:
    tau = (1/kappa) p_expr phi n."""
    _require(si, "p_expr", "phi")
    if n < 0:
        raise SizingError("population size must be nonnegative")
    return (1.0 / si.kappa) * si.p_expr * si.phi * n


# ---------------------------------------------------------------------------
# per-problem instantiations (k = fragment defining length, usually 1)


def order_p_expr(k: int, lam: float, m: int) -> float:
    """P(a present block is expressed) under first-occurrence semantics:
    exp(-k exp(-lam / 2m))."""
    if lam <= 0 or m < 1 or k < 1:
        raise SizingError("need lam > 0, m >= 1, k >= 1")
    return math.exp(-k * math.exp(-lam / (2.0 * m)))


def order_popsize(
    k: int,
    alpha: float,
    sigma2_bb: float,
    d: float,
    m: int,
    n_l: float,
    lam: float,
    method: CMethod = CMethod.TABLE_FIT,
) -> float:
    """Sizing for the first-occurrence (at most one expression) problem:
    n = 2**(k-1) c (sigma2/d**2) [q_bar - 1] exp(k exp(-lam/2m))."""
    c = c_from_alpha(alpha, method)
    q_bar = q_bar_order(m, n_l)
    if d == 0:
        raise SizingError("signal d must be nonzero")
    if lam <= 0:
        raise SizingError("average tree size must be positive")
    return (
        2.0 ** (k - 1)
        * c
        * (sigma2_bb / d**2)
        * (q_bar - 1.0)
        * math.exp(k * math.exp(-lam / (2.0 * m)))
    )


def loud_popsize(
    k: int,
    alpha: float,
    sigma2_bb: float,
    d: float,
    lam: float,
    method: CMethod = CMethod.TABLE_FIT,
) -> float:
    """Sizing for the always-expressed problem:
    n = 2 * 3**k c (sigma2/d**2) [lam/3 - 1] (2/lam). Needs lam > 3."""
    if lam <= 3.0:
        raise SizingError(f"average tree size must exceed 3, got {lam}")
    c = c_from_alpha(alpha, method)
    if d == 0:
        raise SizingError("signal d must be nonzero")
    return 2.0 * 3**k * c * (sigma2_bb / d**2) * (lam / 3.0 - 1.0) * (2.0 / lam)


def onoff_popsize(
    k: int,
    alpha: float,
    sigma2_bb: float,
    d: float,
    lam: float,
    p_exp: float,
    h: int,
    method: CMethod = CMethod.TABLE_FIT,
) -> float:
    """Sizing for tunable expression:
    n = 2**(k+1) c (sigma2/d**2) [(lam/2) p_exp**h - 1] (2 / (lam p_exp**h)).

    Requires (lam/2) p_exp**h > 1, i.e. at least one expressed block per tree
    beyond the anchor; otherwise the collateral-noise model has nothing to say.
    """
    if not 0.0 <= p_exp <= 1.0:
        raise SizingError("p_exp must lie in [0, 1]")
    if h < 1 or lam <= 0:
        raise SizingError("need h >= 1 and lam > 0")
    expressed = (lam / 2.0) * p_exp**h
    if expressed <= 1.0:
        raise SizingError(
            f"(lam/2) p_exp**h = {expressed:.4g} <= 1: expression too rare for the model"
        )
    c = c_from_alpha(alpha, method)
    if d == 0:
        raise SizingError("signal d must be nonzero")
    return 2.0 ** (k + 1) * c * (sigma2_bb / d**2) * (expressed - 1.0) * (
        2.0 / (lam * p_exp**h)
    )
