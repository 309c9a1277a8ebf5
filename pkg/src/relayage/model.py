"""State space and one-slot dynamics of the two-hop status-update system.

A source samples fresh updates every slot (generate-at-will) and pushes
them to a relay over an unreliable link; the relay either receives a new
update or forwards its stored one to the destination. The system state is
the pair (k, d): the relay's own age k and the age gain d between
destination and relay, so the destination's instantaneous age is k + d.

Valid states are (k >= 2, d = 0) or (k >= 1, d >= 2); a gain of exactly 1
can never occur because a successful forward resets d to 0 while ages at
both ends then grow in lockstep.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Action(enum.IntEnum):
    RECEIVE = 0
    FORWARD = 1


class SystemState(NamedTuple):
    k: int  # relay age, slots
    d: int  # age gain destination - relay, slots


@dataclass(frozen=True)
class LinkParams:
    """Per-slot success probabilities of the source-relay and relay-destination links."""

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if not (0.0 < self.q <= 1.0):
            raise ValueError(f"q must be in (0, 1], got {self.q}")


@dataclass(frozen=True)
class ResourceBudget:
    """Cap on the long-run fraction of slots spent forwarding."""

    eta_c: float

    def __post_init__(self):
        if not (0.0 < self.eta_c <= 1.0):
            raise ValueError(f"eta_c must be in (0, 1], got {self.eta_c}")


def is_valid_state(k: int, d: int) -> bool:
    """True iff (k, d) is reachable: (k >= 2, d = 0) or (k >= 1, d >= 2)."""
    if d == 0:
        return k >= 2
    return k >= 1 and d >= 2


def _require_valid(s: SystemState) -> None:
    if not is_valid_state(s.k, s.d):
        raise ValueError(f"invalid state {s!r}: need (k>=2, d=0) or (k>=1, d>=2)")


def destination_age(s: SystemState) -> int:
    _require_valid(s)
    return s.k + s.d


def step(s: SystemState, a: Action, sr_ok: bool, rd_ok: bool) -> SystemState:
    """Deterministic one-slot transition given realized link outcomes.

    Receive with source-relay success resets the relay age to 1 and the old
    destination age k+d becomes the gain; forward with relay-destination
    success synchronizes the two ends (d=0). Any failure just ages both.
    """
    _require_valid(s)
    if a == Action.RECEIVE and sr_ok:
        return SystemState(1, s.k + s.d)
    if a == Action.FORWARD and rd_ok:
        return SystemState(s.k + 1, 0)
    return SystemState(s.k + 1, s.d)


def transition_distribution(
    s: SystemState, a: Action, lp: LinkParams
) -> list[tuple[SystemState, float]]:
    """Successor states with probabilities, zero-mass branches omitted."""
    _require_valid(s)
    if a == Action.RECEIVE:
        pairs = [
            (SystemState(s.k + 1, s.d), 1.0 - lp.p),
            (SystemState(1, s.k + s.d), lp.p),
        ]
    elif s.d == 0:
        # failure and success coincide when already synchronized
        pairs = [(SystemState(s.k + 1, 0), 1.0)]
    else:
        pairs = [
            (SystemState(s.k + 1, s.d), 1.0 - lp.q),
            (SystemState(s.k + 1, 0), lp.q),
        ]
    return [(nxt, pr) for nxt, pr in pairs if pr > 0.0]


class TruncatedStateSpace:
    """All valid states with k <= k_max and d <= d_max, in a fixed order.

    Enumeration order: the d=0 column for k = 2..k_max first, then row
    blocks d = 2..d_max each scanning k = 1..k_max. The order is part of
    the contract; policies and stationary vectors are aligned to it.

    Transitions that would leave the box saturate: k clips to k_max and
    the gain after a receive-success clips to d_max.
    """

    def __init__(self, k_max: int, d_max: int):
        if k_max < 2 or d_max < 2:
            raise ValueError("need k_max >= 2 and d_max >= 2")
        self.k_max = int(k_max)
        self.d_max = int(d_max)
        n0 = self.k_max - 1
        n = n0 + (self.d_max - 1) * self.k_max
        ks = np.empty(n, dtype=np.int64)
        ds = np.empty(n, dtype=np.int64)
        ks[:n0] = np.arange(2, self.k_max + 1)
        ds[:n0] = 0
        for j, d in enumerate(range(2, self.d_max + 1)):
            lo = n0 + j * self.k_max
            ks[lo : lo + self.k_max] = np.arange(1, self.k_max + 1)
            ds[lo : lo + self.k_max] = d
        self.ks = ks
        self.ds = ds
        self.n_states = n

    def __len__(self) -> int:
        return self.n_states

    def index_of(self, k: int, d: int) -> int:
        if not is_valid_state(k, d) or k > self.k_max or d > self.d_max:
            raise ValueError(f"state ({k}, {d}) not in space")
        if d == 0:
            return k - 2
        return (self.k_max - 1) + (d - 2) * self.k_max + (k - 1)

    def state_at(self, i: int) -> SystemState:
        return SystemState(int(self.ks[i]), int(self.ds[i]))

    def index_grid(self, ks: np.ndarray, ds: np.ndarray) -> np.ndarray:
        """Vectorized index_of with saturation at the caps."""
        k = np.minimum(ks, self.k_max)
        d = np.minimum(ds, self.d_max)
        out = np.where(d == 0, k - 2, (self.k_max - 1) + (d - 2) * self.k_max + (k - 1))
        return out.astype(np.int64)

    def successor_indices(self, lp: LinkParams):
        """Per-state successor indices and probabilities for both actions.

        Returns (recv_stay, recv_jump, fwd_stay, fwd_sync) index arrays; the
        stay branches carry probability 1-p / 1-q, the jump/sync branches
        p / q. Saturation applied.
        """
        k, d = self.ks, self.ds
        recv_stay = self.index_grid(k + 1, d)
        recv_jump = self.index_grid(np.ones_like(k), k + d)
        fwd_stay = recv_stay
        fwd_sync = self.index_grid(k + 1, np.zeros_like(d))
        return recv_stay, recv_jump, fwd_stay, fwd_sync
