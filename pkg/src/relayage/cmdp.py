"""Constrained average-cost solver via Lagrangian bisection.

The forwarding-rate constraint is folded into the stage cost with a
multiplier lambda; the unconstrained problem is solved by relative value
iteration, and lambda is driven by bisection until two adjacent
deterministic policies straddle the budget. The optimal constrained
policy mixes those two at their single differing state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov import policy_long_run_metrics
from .model import LinkParams, ResourceBudget, TruncatedStateSpace
from .policies import DeterministicPolicy, MixedPolicy
from .rvi import RviConfig, RviSolution, rvi_solve

DEFAULT_CAP = 200

_MAX_DOUBLINGS = 60
_RATE_SLACK = 1e-7  # tolerated non-monotonicity of rate(lambda) from tie flips


class BracketingError(RuntimeError):
    """Bisection could not isolate two policies differing in one state."""


@dataclass
class _Endpoint:
    lam: float
    solution: RviSolution
    avg_aoi: float
    rate: float


def _evaluate(
    lp: LinkParams,
    lam: float,
    space: TruncatedStateSpace,
    cfg: RviConfig,
    bias0: np.ndarray | None,
) -> _Endpoint:
    sol = rvi_solve(lp, lam, space, cfg, bias0=bias0)
    aoi, rate = policy_long_run_metrics(sol.policy, lp, space)
    return _Endpoint(lam, sol, aoi, rate)


def cmdp_solve(
    lp: LinkParams,
    budget: ResourceBudget,
    space: TruncatedStateSpace | None = None,
    rvi_config: RviConfig | None = None,
    multiplier_tol: float = 1e-6,
) -> MixedPolicy:
    """Minimize average destination age subject to a forwarding-rate cap.

    Returns a :class:`MixedPolicy`. When the unconstrained (lambda = 0)
    optimum already satisfies the budget the mixture is degenerate: both
    constituents are that policy and ``alpha`` is 1. Otherwise the two
    constituents come from multipliers a bisection step apart, the first
    infeasible and the second feasible, and ``alpha`` is set so the mixed
    forwarding rate meets the budget with equality.
    """
    space = space or TruncatedStateSpace(DEFAULT_CAP, DEFAULT_CAP)
    cfg = rvi_config or RviConfig()
    if multiplier_tol <= 0:
        raise ValueError("multiplier_tol must be positive")
    eta = budget.eta_c

    lo = _evaluate(lp, 0.0, space, cfg, None)
    if lo.rate <= eta:
        return MixedPolicy(
            lo.solution.policy, lo.solution.policy, 1.0, (),
            lambda1=0.0, lambda2=0.0, rate1=lo.rate, rate2=lo.rate,
        )

    # Any forwarding costs at least lambda per slot; for lambda beyond the
    # worst-case age span the charge dominates and the rate collapses, so
    # doubling finds a feasible endpoint quickly.
    lam = 1.0
    hi = None
    bias = lo.solution.bias
    for _ in range(_MAX_DOUBLINGS):
        cand = _evaluate(lp, lam, space, cfg, bias)
        bias = cand.solution.bias
        if cand.rate <= eta:
            hi = cand
            break
        lo = cand
        lam *= 2.0
    if hi is None:
        raise BracketingError(
            f"forwarding rate still {lo.rate:.6f} > {eta} at lambda = {lo.lam:g}"
        )

    def bisect_once(a: _Endpoint, b: _Endpoint) -> tuple[_Endpoint, _Endpoint]:
        mid_lam = 0.5 * (a.lam + b.lam)
        mid = _evaluate(lp, mid_lam, space, cfg, a.solution.bias)
        if mid.rate > a.rate + _RATE_SLACK or mid.rate < b.rate - _RATE_SLACK:
            raise BracketingError(
                f"rate not monotone in lambda near {mid_lam:g}: "
                f"{a.rate:.9f} / {mid.rate:.9f} / {b.rate:.9f}"
            )
        return (mid, b) if mid.rate > eta else (a, mid)

    while hi.lam - lo.lam > multiplier_tol:
        lo, hi = bisect_once(lo, hi)

    differing = lo.solution.policy.differing_states(hi.solution.policy)
    # Adjacent multipliers usually pin a single switching state; if several
    # remain, keep narrowing down to floating-point resolution.
    while len(differing) > 1 and hi.lam - lo.lam > 1e-13:
        lo, hi = bisect_once(lo, hi)
        differing = lo.solution.policy.differing_states(hi.solution.policy)
    if len(differing) > 1:
        raise BracketingError(
            f"{len(differing)} states still differ at multiplier gap "
            f"{hi.lam - lo.lam:.2e}; cannot form a one-state mixture"
        )

    if not differing:
        # Identical policies cannot straddle the budget strictly; only
        # reachable if the two rates agree to rounding, so the feasible
        # endpoint alone is optimal.
        alpha = 0.0
    else:
        alpha = _calibrate_alpha(
            eta, lo.solution.policy, hi.solution.policy, tuple(differing),
            lp, space, lo.rate, hi.rate,
        )

    return MixedPolicy(
        lo.solution.policy, hi.solution.policy, alpha, tuple(differing),
        lambda1=lo.lam, lambda2=hi.lam, rate1=lo.rate, rate2=hi.rate,
    )


def _calibrate_alpha(
    eta: float,
    theta1: DeterministicPolicy,
    theta2: DeterministicPolicy,
    differing: tuple,
    lp: LinkParams,
    space: TruncatedStateSpace,
    rate1: float,
    rate2: float,
) -> float:
    """Weight on theta1 making the per-visit mixture rate equal eta.

    Linear interpolation between the constituent rates only approximates
    the stationary rate of the visit-randomized chain (the occupation
    measure itself shifts with alpha). That rate is an exact
    linear-fractional function of alpha, so one midpoint solve pins it
    and the budget-equality weight follows in closed form.
    """

    def rate_at(a: float) -> float:
        m = MixedPolicy(theta1, theta2, a, differing)
        return policy_long_run_metrics(m, lp, space)[1]

    half = rate_at(0.5)
    denom = rate1 - half
    if denom <= 0.0:
        return float(np.clip((eta - rate2) / (rate1 - rate2), 0.0, 1.0))
    d_coef = (2.0 * half - rate2 - rate1) / denom
    n_coef = rate1 - rate2 + rate1 * d_coef
    alpha = float(np.clip((eta - rate2) / (n_coef - eta * d_coef), 0.0, 1.0))
    if abs(rate_at(alpha) - eta) > 1e-9:
        from scipy.optimize import brentq

        alpha = float(brentq(lambda a: rate_at(a) - eta, 0.0, 1.0, xtol=1e-14))
    return alpha
