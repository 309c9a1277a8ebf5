"""Average-cost relative value iteration on the truncated state space.

Minimizes the long-run average of the per-slot cost k + d + lambda * w,
i.e. destination age plus a forwarding charge. Iterates a damped Bellman
update (the standard aperiodicity transform; without it perfect links make
the optimal chain periodic and the iteration oscillates) and stops on the
span seminorm of successive iterates. The recorded bias vector lets a
follow-up solve at a nearby multiplier start warm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Action, LinkParams, SystemState, TruncatedStateSpace
from .policies import DeterministicPolicy


@dataclass(frozen=True)
class RviConfig:
    span_tolerance: float = 1e-9
    max_iterations: int = 200_000
    reference_state: SystemState = SystemState(2, 0)
    damping: float = 0.5

    def __post_init__(self):
        if self.span_tolerance <= 0:
            raise ValueError("span_tolerance must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class RviSolution:
    policy: DeterministicPolicy
    average_cost: float
    iterations: int
    span: float
    bias: np.ndarray


class RviConvergenceError(RuntimeError):
    def __init__(self, iterations: int, span: float, tol: float):
        self.span = span
        super().__init__(
            f"no convergence after {iterations} iterations; span {span:.3e} > {tol:.1e}"
        )


def lagrangian_cost(s: SystemState, a: Action, lam: float) -> float:
    """Per-slot cost: destination age plus lambda per forwarding action."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return s.k + s.d + (lam if a == Action.FORWARD else 0.0)


def rvi_solve(
    lp: LinkParams,
    lam: float,
    space: TruncatedStateSpace,
    cfg: RviConfig | None = None,
    bias0: np.ndarray | None = None,
) -> RviSolution:
    """Optimal deterministic policy for the lambda-charged average cost.

    Ties between the two actions break toward RECEIVE, so the output is
    unique and forwarding is never chosen without strict benefit.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    cfg = cfg or RviConfig()
    p, q = lp.p, lp.q
    age = (space.ks + space.ds).astype(np.float64)
    recv_stay, recv_jump, fwd_stay, fwd_sync = space.successor_indices(lp)
    ref = space.index_of(*cfg.reference_state)
    tau = cfg.damping

    h = np.zeros(space.n_states) if bias0 is None else bias0.astype(np.float64, copy=True)
    span = np.inf
    gain = np.nan
    for it in range(1, cfg.max_iterations + 1):
        q_recv = age + (1.0 - p) * h[recv_stay] + p * h[recv_jump]
        q_fwd = age + lam + (1.0 - q) * h[fwd_stay] + q * h[fwd_sync]
        m = np.minimum(q_recv, q_fwd)
        diff = tau * (m - h)
        lo, hi = diff.min(), diff.max()
        span = hi - lo
        gain = (hi + lo) / (2.0 * tau)
        h = h + diff
        h -= h[ref]
        if span <= cfg.span_tolerance:
            break
    else:
        raise RviConvergenceError(cfg.max_iterations, span, cfg.span_tolerance)

    q_recv = age + (1.0 - p) * h[recv_stay] + p * h[recv_jump]
    q_fwd = age + lam + (1.0 - q) * h[fwd_stay] + q * h[fwd_sync]
    actions = (q_fwd < q_recv).astype(np.uint8)
    return RviSolution(DeterministicPolicy(space, actions), float(gain), it, float(span), h)
