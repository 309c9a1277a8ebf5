"""Double-threshold relaying: the policy rule and its closed-form analysis.

The relay forwards only when its own age is still small (k <= delta1) and
the destination lags far enough behind (d >= delta2); otherwise it
receives. The induced chain admits closed forms for the stationary
distribution, the average destination age, and the forwarding rate.

Two threshold regimes behave differently. When delta1 <= delta2 - 1 every
formula here is exact. When delta1 >= delta2 - 1 the average-age formula
and the per-state masses with d >= delta2 rest on a first-row recursion
that drops the age-zero injection terms, so they are approximations that
tighten as q grows; the normalization mass and the forwarding rate remain
exact in both regimes. ``dtr_avg_aoi_exact`` keeps the dropped terms and
is exact in both regimes; the solver-grade answer when approximation error
matters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import (
    Action,
    LinkParams,
    ResourceBudget,
    SystemState,
    TruncatedStateSpace,
    is_valid_state,
)
from .policies import DeterministicPolicy


@dataclass(frozen=True)
class DtrThresholds:
    """Relay-age threshold delta1 >= 1 and age-gain threshold delta2 >= 2.

    delta2 = 2 deactivates the gain condition: any state with d >= 2
    already satisfies it.
    """

    delta1: int
    delta2: int

    def __post_init__(self):
        if self.delta1 < 1:
            raise ValueError("delta1 must be >= 1")
        if self.delta2 < 2:
            raise ValueError("delta2 must be >= 2")


class CaseFlag(enum.Enum):
    GE = "delta1 >= delta2 - 1"
    LE = "delta1 <= delta2 - 1"


class SpecialCase(enum.Enum):
    EqualMinusOne = "delta1 == delta2 - 1"
    QtoOne = "q -> 1"
    Delta2Inactive = "delta2 == 2"
    Delta1Infinite = "delta1 -> infinity"


class AoiValue(NamedTuple):
    value: float
    exact: bool


def dtr_action(t: DtrThresholds, s: SystemState) -> Action:
    if not is_valid_state(s.k, s.d):
        raise ValueError(f"invalid state {s!r}")
    if s.k <= t.delta1 and s.d >= t.delta2:
        return Action.FORWARD
    return Action.RECEIVE


def dtr_policy(space: TruncatedStateSpace, t: DtrThresholds) -> DeterministicPolicy:
    acts = ((space.ks <= t.delta1) & (space.ds >= t.delta2)).astype(np.uint8)
    return DeterministicPolicy(space, acts)


def case_flag(t: DtrThresholds) -> CaseFlag:
    return CaseFlag.GE if t.delta1 >= t.delta2 - 1 else CaseFlag.LE


# ---------------------------------------------------------------------------
# stationary distribution


def normalization_x(lp: LinkParams, t: DtrThresholds) -> float:
    """Stationary mass of the synchronized state (2, 0); exact in both regimes."""
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    if d1 >= d2 - 1:
        den = q * (1 - p) + p * q * d2 + p * (1 - q) ** (d2 - 1) * (1 - (1 - q) ** (d1 - d2 + 1))
        return p * q * q / den
    den = (1 - p) + p * d2 - p * (d2 - d1 - 1) * (1 - q) ** d1
    return p * q / den


def _geom_pair_sum(a: float, b: float, n: int) -> float:
    # sum_{i=0}^{n-1} a^i b^(n-1-i); equals (a^n - b^n)/(a - b) but is
    # division-free, so a == b costs nothing special
    return math.fsum(a**i * b ** (n - 1 - i) for i in range(n))


def _pi_first_gain_row(lp: LinkParams, t: DtrThresholds) -> float:
    # mass of (1, delta2); exact in both regimes
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    x = normalization_x(lp, t)
    if d1 >= d2 - 1:
        return p * (1 - (1 - q) ** (d2 - 1)) * x / q
    return p * (1 - (1 - q) ** d1) * x / q


def _path_weight(N: int, l: int) -> float:
    # C(N+l-1, l); exact integers while small, log-gamma beyond
    if N + l - 1 <= 200:
        return float(math.comb(N + l - 1, l))
    return math.exp(math.lgamma(N + l) - math.lgamma(l + 1) - math.lgamma(N))


def _first_row_high_gain(lp: LinkParams, t: DtrThresholds, d: int) -> float:
    # pi(1, d) for d >= delta2: weighted paths of receive-failure steps and
    # forward-failure excursions of length delta1+1
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    n, m = divmod(d - d2, d1 + 1)
    r = p * (1 - q) ** d1
    total = 0.0
    for l in range(n + 1):
        N = (n - l) * (d1 + 1) + m + 1
        total += _path_weight(N, l) * r**l * (1 - p) ** (N - 1)
    return total * _pi_first_gain_row(lp, t)


def stationary_prob(lp: LinkParams, t: DtrThresholds, s: SystemState) -> float:
    """Closed-form stationary probability of one state.

    Exact except for d >= delta2 in the delta1 >= delta2 - 1 regime, where
    the first-row recursion is approximate.
    """
    if not is_valid_state(s.k, s.d):
        raise ValueError(f"invalid state {s!r}")
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    k, d = s.k, s.d
    x = normalization_x(lp, t)
    if d == 0:
        if k <= d1 + 1:
            return _geom_pair_sum(1 - p, 1 - q, k - 1) * x
        return _geom_pair_sum(1 - p, 1 - q, d1) * (1 - p) ** (k - d1 - 1) * x
    if d < d2:
        if d1 >= d2 - 1 or d <= d1 + 1:
            return p * (1 - p) ** (k - 1) * (1 - (1 - q) ** (d - 1)) * x / q
        return p * (1 - p) ** (k - 1) * (1 - (1 - q) ** d1) * x / q
    first = _first_row_high_gain(lp, t, d)
    if k <= d1 + 1:
        return (1 - q) ** (k - 1) * first
    return (1 - q) ** d1 * (1 - p) ** (k - d1 - 1) * first


@dataclass(frozen=True)
class ClosedFormDistribution:
    """Bundled closed-form stationary distribution for one parameter point."""

    params: LinkParams
    thresholds: DtrThresholds
    x: float
    pi_1_delta2: float
    case: CaseFlag

    @classmethod
    def build(cls, lp: LinkParams, t: DtrThresholds) -> "ClosedFormDistribution":
        return cls(lp, t, normalization_x(lp, t), _pi_first_gain_row(lp, t), case_flag(t))

    def probability(self, s: SystemState) -> float:
        return stationary_prob(self.params, self.thresholds, s)


# ---------------------------------------------------------------------------
# average age and forwarding rate


def _column_moments(p: float, q: float, d1: int) -> tuple[float, float]:
    # sums over k of k*c_k and c_k, where c_k is the high-gain column decay:
    # (1-q)^(k-1) up to k = delta1+1, then (1-p) steps
    A = (1 - q) ** d1
    theta1 = A * (d1 / p + 1 / p**2 - d1 / q - 1 / q**2) + 1 / q**2
    theta2 = (1 / p - 1 / q) * A + 1 / q
    return theta1, theta2


def subspace_aoi_terms(lp: LinkParams, t: DtrThresholds) -> tuple[float, float, float]:
    """Per-subspace contributions to the average destination age.

    Returns (zero-gain term, low-gain term, high-gain term): sums of
    k*pi(k,0), (k+d)*pi over 2 <= d <= delta2-1, and (k+d)*pi over
    d >= delta2. The high-gain term is approximate in the
    delta1 >= delta2 - 1 regime, matching ``dtr_avg_aoi``.
    """
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    x = normalization_x(lp, t)
    A = (1 - q) ** d1
    term_zero = ((p + q) * (1 - A) - p * q * d1 * A) * x / (p * p * q * q)
    B2 = (1 - q) ** (d2 - 1)
    if d1 >= d2 - 1:
        term_low = (
            (q * d2 - q - (1 - B2)) / (p * q * q)
            + (d2 + 1) * (d2 - 2) / (2 * q)
            - (1 - q * q - (1 - q + q * d2) * B2) / q**3
        ) * x
        tail = (
            d1 * A * (1 - B2) / (q * (1 - A) ** 2)
            + (1 - B2) / (p * q * (1 - A) ** 2)
            - (1 - B2) / (q * (1 - A))
        )
    else:
        term_low = (
            (q * d2 - q - 1 + (1 - q * d2 + q * d1 + q) * A) / (p * q * q)
            + (d2 + 1) * (d2 - 2) / (2 * q)
            - (1 - q * q - (1 + q + q * d1) * (1 - q) ** (d1 + 1)) / q**3
            - A * (d1 + d2 + 1) * (d2 - d1 - 2) / (2 * q)
        ) * x
        tail = d1 * A / (q * (1 - A)) + 1 / (p * q * (1 - A)) - 1 / q
    theta1, theta2 = _column_moments(p, q, d1)
    term_high = (theta1 + theta2 * d2) * x / q + theta2 * tail * x
    return term_zero, term_low, term_high


def _avg_aoi_ge(p: float, q: float, d1: int, d2: int) -> float:
    # approximate closed form for delta1 >= delta2 - 1
    A = (1 - q) ** d1
    B = (1 - q) ** (d2 - 1)
    den = q * (1 - p) + p * q * d2 + p * B - p * A
    t1 = ((p * d1 - q * d2) * A + q * d2 * (p * (d2 - 1) / 2 + 1) + 1) / den
    num2 = p * (p * d1 - q * d1 - q) * A + p - q - p * q * d1 + q * (p * d1 + 1) / (1 - A)
    t2 = (1 - B) * num2 / (p * (1 - A) * den)
    return 1 / p + 1 / q + d2 - t1 + t2


def _avg_aoi_le(p: float, q: float, d1: int, d2: int) -> float:
    # exact closed form for delta1 <= delta2 - 1
    A = (1 - q) ** d1
    den = (1 - p) + p * d2 - p * (d2 - d1 - 1) * A
    return 1 / q + 1 / (p * (1 - A)) + (d1 + d2) / 2 - (d2 + (1 - p) * d1 + p * d1 * d2) / 2 / den


def _avg_aoi_equal(p: float, q: float, d1: int) -> float:
    # both branches collapse to this at delta1 = delta2 - 1
    A = (1 - q) ** d1
    return 1 / q + (d1 + 1) / 2 + 1 / (p * (1 - A)) - (d1 + 1) / (2 * (1 + p * d1))


def dtr_avg_aoi(lp: LinkParams, t: DtrThresholds) -> AoiValue:
    """Closed-form average destination age with an exactness flag.

    delta1 < delta2 - 1 is exact; delta1 > delta2 - 1 is the approximate
    branch; at equality the regimes agree and the collapsed form is used.
    """
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    if d1 == d2 - 1:
        return AoiValue(_avg_aoi_equal(p, q, d1), True)
    if d1 > d2 - 1:
        return AoiValue(_avg_aoi_ge(p, q, d1, d2), False)
    return AoiValue(_avg_aoi_le(p, q, d1, d2), True)


def dtr_avg_aoi_exact(lp: LinkParams, t: DtrThresholds) -> float:
    """Exact average destination age in both threshold regimes.

    Keeps the age-zero injection terms that the approximate high-gain
    recursion drops; with them the first-row sums telescope in closed form,
    so no approximation is needed. Agrees with ``dtr_avg_aoi`` wherever the
    latter is exact.
    """
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    if d1 <= d2 - 1:
        return _avg_aoi_le(p, q, d1, d2)
    x = normalization_x(lp, t)
    A = (1 - q) ** d1
    a = 1 - q
    M = d1 + 1 - d2
    W = a ** (d2 - 1) * (1 - a**M * (1 + M * q)) / q**2 if M > 0 else 0.0
    T = ((x / q) * ((1 - p) + p * A * (d1 + 1)) + p * x * W) / (p * (1 - A))
    theta1, theta2 = _column_moments(p, q, d1)
    term_zero, term_low, _ = subspace_aoi_terms(lp, t)
    term_high = (theta1 + theta2 * d2) * x / q + theta2 * T
    return term_zero + term_low + term_high


def dtr_avg_aoi_special(lp: LinkParams, t: DtrThresholds, case: SpecialCase) -> float:
    """Reduced forms for the four special threshold/link regimes.

    Used to cross-validate the general branches. The delta2 = 2 reduction
    is re-derived from the general approximate branch rather than
    transcribed, so it agrees with ``dtr_avg_aoi`` by construction.
    """
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    if case is SpecialCase.EqualMinusOne:
        if d1 != d2 - 1:
            raise ValueError("EqualMinusOne needs delta1 == delta2 - 1")
        return _avg_aoi_equal(p, q, d1)
    if case is SpecialCase.QtoOne:
        # limit q -> 1 of either branch; q plays no role
        return 1 + 1 / p + p * d2 * (d2 - 1) / (2 * (1 - p + p * d2))
    if case is SpecialCase.Delta2Inactive:
        if d2 != 2:
            raise ValueError("Delta2Inactive needs delta2 == 2")
        A = (1 - q) ** d1
        D = q + p * (1 - A)
        return (
            1 / p
            + 1 / q
            + 2
            - ((p * d1 - 2 * q) * A + p * q + 2 * q + 1) / D
            + q * q * (p * d1 + 1) / (p * D * (1 - A) ** 2)
            - q * (p * A * (q * d1 + q - p * d1) + q - p + p * q * d1) / (p * D * (1 - A))
        )
    if case is SpecialCase.Delta1Infinite:
        # delta1 -> infinity with delta2 fixed; delta1 plays no role
        B = (1 - q) ** (d2 - 1)
        den = q * (1 - p) + p * q * d2 + p * B
        return 1 / p + 1 / q + d2 - (q * d2 * (p * (d2 - 1) / 2 + 1) + B) / den
    raise ValueError(f"unknown case {case!r}")


def dtr_forwarding_rate(lp: LinkParams, t: DtrThresholds) -> float:
    """Long-run fraction of slots spent forwarding; exact in both regimes."""
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    if d1 >= d2 - 1:
        den = (1 - p) * q + p * q * d2 + p * (1 - q) ** (d2 - 1) * (1 - (1 - q) ** (d1 - d2 + 1))
    else:
        den = (1 - p) * q + p * q * d2 - p * q * (d2 - d1 - 1) * (1 - q) ** d1
    return p * (1 - (1 - q) ** d1) / den


# ---------------------------------------------------------------------------
# threshold search


class NoFeasibleThresholds(RuntimeError):
    def __init__(self, eta_c: float, min_rate: float, at: DtrThresholds):
        self.min_rate = min_rate
        self.at = at
        super().__init__(
            f"no thresholds within bounds meet the budget {eta_c}; "
            f"minimum achievable rate is {min_rate:.6f} at {at}"
        )


def optimize_thresholds(
    lp: LinkParams,
    budget: ResourceBudget,
    delta1_max: int = 60,
    delta2_max: int = 60,
) -> tuple[DtrThresholds, AoiValue]:
    """Exhaustive search over the threshold grid under the rate budget.

    Minimizes the closed-form average age among pairs whose forwarding rate
    fits the budget; ties break toward smaller delta1, then smaller delta2.
    The returned age carries the branch exactness flag; callers comparing
    against other policies should re-evaluate the winner with
    ``dtr_avg_aoi_exact``.
    """
    if delta1_max < 1 or delta2_max < 2:
        raise ValueError("bounds below minimum legal thresholds")
    best: tuple[DtrThresholds, AoiValue] | None = None
    min_rate = math.inf
    min_rate_at = None
    for d1 in range(1, delta1_max + 1):
        for d2 in range(2, delta2_max + 1):
            t = DtrThresholds(d1, d2)
            rate = dtr_forwarding_rate(lp, t)
            if rate < min_rate:
                min_rate, min_rate_at = rate, t
            if rate > budget.eta_c:
                continue
            aoi = dtr_avg_aoi(lp, t)
            if best is None or aoi.value < best[1].value:
                best = (t, aoi)
    if best is None:
        raise NoFeasibleThresholds(budget.eta_c, min_rate, min_rate_at)
    return best
