"""Policies over the truncated state space: deterministic action grids,
randomized two-policy mixtures, and the monotone-structure check that
solver outputs are expected to satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Action, SystemState, TruncatedStateSpace


class DeterministicPolicy:
    """A total state -> action map, stored as one action per enumerated state.

    Lookups outside the space saturate at the caps, which extends the policy
    to the full (untruncated) state space; the simulator relies on this.
    """

    def __init__(self, space: TruncatedStateSpace, actions: np.ndarray):
        actions = np.asarray(actions, dtype=np.uint8)
        if actions.shape != (space.n_states,):
            raise ValueError("actions must have one entry per state")
        self.space = space
        self.actions = actions

    @classmethod
    def from_rule(cls, space: TruncatedStateSpace, rule) -> "DeterministicPolicy":
        """Build from a callable SystemState -> Action."""
        acts = np.fromiter(
            (int(rule(space.state_at(i))) for i in range(space.n_states)),
            dtype=np.uint8,
            count=space.n_states,
        )
        return cls(space, acts)

    def action(self, s: SystemState) -> Action:
        i = self.space.index_grid(np.array([s.k]), np.array([s.d]))[0]
        return Action(int(self.actions[i]))

    def action_table(self) -> np.ndarray:
        """Dense (k_max+1) x (d_max+1) lookup table, saturating semantics.

        Invalid cells hold the action of the nearest valid state so that a
        clipped lookup never reads garbage; cell [k, d] answers for every
        true state whose clipped coordinates are (k, d).
        """
        sp = self.space
        table = np.zeros((sp.k_max + 1, sp.d_max + 1), dtype=np.uint8)
        table[sp.ks, sp.ds] = self.actions
        # d = 1 is unreachable; k = 0 likewise. Leave them RECEIVE.
        # (1, 0) is invalid but clipping never produces it: k+1 >= 2.
        return table

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DeterministicPolicy)
            and self.space is other.space
            and bool(np.array_equal(self.actions, other.actions))
        )

    def differing_states(self, other: "DeterministicPolicy") -> list[SystemState]:
        if self.space is not other.space:
            raise ValueError("policies live on different spaces")
        idx = np.nonzero(self.actions != other.actions)[0]
        return [self.space.state_at(int(i)) for i in idx]


@dataclass(frozen=True)
class MixedPolicy:
    """Randomized mixture of two deterministic policies.

    The two constituents differ in at most one state; on each visit to that
    state the action of ``theta1`` is taken with probability ``alpha``.
    """

    theta1: DeterministicPolicy
    theta2: DeterministicPolicy
    alpha: float
    differing: tuple[SystemState, ...]
    lambda1: float | None = None
    lambda2: float | None = None
    rate1: float | None = None
    rate2: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if len(self.differing) > 1:
            raise ValueError("constituent policies differ in more than one state")


def verify_switching_structure(policy: DeterministicPolicy) -> list[tuple[SystemState, SystemState]]:
    """Return all pairs violating the monotone switching structure.

    Rules: FORWARD at (k, d) forces FORWARD at (k, d+z), and RECEIVE at
    (k, d) forces RECEIVE at (k+z, d), for every in-space z > 0. An empty
    list means the policy is of switching type.
    """
    sp = policy.space
    violations: list[tuple[SystemState, SystemState]] = []

    # Dense (k, d) action grid; mask marks valid cells.
    grid = np.zeros((sp.k_max + 1, sp.d_max + 1), dtype=np.int8)
    valid = np.zeros_like(grid, dtype=bool)
    grid[sp.ks, sp.ds] = policy.actions
    valid[sp.ks, sp.ds] = True

    d_axis = [0] + list(range(2, sp.d_max + 1))
    for k in range(1, sp.k_max + 1):
        cols = [d for d in d_axis if valid[k, d]]
        seen_forward_at = None
        for d in cols:
            if grid[k, d] == Action.FORWARD:
                seen_forward_at = d
            elif seen_forward_at is not None:
                violations.append((SystemState(k, seen_forward_at), SystemState(k, d)))
    for d in d_axis:
        rows = [k for k in range(1, sp.k_max + 1) if valid[k, d]]
        seen_receive_at = None
        for k in rows:
            if grid[k, d] == Action.RECEIVE:
                seen_receive_at = k
            elif seen_receive_at is not None:
                violations.append((SystemState(seen_receive_at, d), SystemState(k, d)))
    return violations
