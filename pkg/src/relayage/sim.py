"""Monte Carlo slot simulator.

Simulates the untruncated two-hop chain under any table policy, a
threshold rule, or a two-policy mixture. Per run, link indicators come
from two independent streams split off a per-run SeedSequence, so the
same (seed, config, policy) reproduces results bit-exactly; a third
stream drives the mixture coin and is never shared with the links, which
keeps degenerate mixtures on the exact trajectory of their constituent.

No warm-up is discarded: averaging starts at the initial state, and the
horizons used in practice dwarf the transient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .dtr import DtrThresholds
from .model import LinkParams, SystemState, TruncatedStateSpace, is_valid_state
from .policies import DeterministicPolicy, MixedPolicy

_CHUNK = 1 << 20
_NO_MIX = (-1, -1, 0, 0, 0.0)  # sentinel: coin stream never consulted


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 1_000_000
    runs: int = 20
    seed: int = 0
    initial_state: SystemState = SystemState(2, 0)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not is_valid_state(*self.initial_state):
            raise ValueError(f"invalid initial state {self.initial_state!r}")


@dataclass(frozen=True)
class SimResult:
    mean_aoi: float
    mean_forwarding_rate: float
    aoi_per_run: np.ndarray
    rate_per_run: np.ndarray
    se_aoi: float
    se_rate: float


@njit(cache=True)
def _advance(k, d, table, sr, rd, coin, mix_k, mix_d, act1, act2, alpha):
    k_cap = table.shape[0] - 1
    d_cap = table.shape[1] - 1
    age_sum = 0
    fwd = 0
    for t in range(sr.shape[0]):
        if d == 1:
            raise RuntimeError("invalid state reached: d == 1")
        age_sum += k + d
        if k == mix_k and d == mix_d:
            a = act1 if coin[t] < alpha else act2
        else:
            kk = k if k < k_cap else k_cap
            dd = d if d < d_cap else d_cap
            a = table[kk, dd]
        if a == 1:
            fwd += 1
            k += 1
            if rd[t]:
                d = 0
        else:
            if sr[t]:
                k, d = 1, k + d
            else:
                k += 1
    return age_sum, fwd, k, d


def _run_once(table, lp, cfg, run, mix):
    mix_k, mix_d, act1, act2, alpha = mix
    children = np.random.SeedSequence((cfg.seed, run)).spawn(3)
    gen_sr = np.random.Generator(np.random.PCG64(children[0]))
    gen_rd = np.random.Generator(np.random.PCG64(children[1]))
    gen_coin = np.random.Generator(np.random.PCG64(children[2]))
    k, d = cfg.initial_state
    age_total = 0
    fwd_total = 0
    left = cfg.horizon
    dummy = np.empty(0)
    while left > 0:
        m = min(left, _CHUNK)
        sr = gen_sr.random(m) < lp.p
        rd = gen_rd.random(m) < lp.q
        coin = gen_coin.random(m) if mix_k >= 0 else dummy
        a, f, k, d = _advance(
            k, d, table, sr, rd, coin, mix_k, mix_d, act1, act2, alpha
        )
        age_total += a
        fwd_total += f
        left -= m
    return age_total / cfg.horizon, fwd_total / cfg.horizon


def _collect(table, lp, cfg, mix) -> SimResult:
    aoi = np.empty(cfg.runs)
    rate = np.empty(cfg.runs)
    for run in range(cfg.runs):
        aoi[run], rate[run] = _run_once(table, lp, cfg, run, mix)
    if cfg.runs > 1:
        se_aoi = float(aoi.std(ddof=1) / np.sqrt(cfg.runs))
        se_rate = float(rate.std(ddof=1) / np.sqrt(cfg.runs))
    else:
        se_aoi = se_rate = float("nan")
    return SimResult(
        float(aoi.mean()), float(rate.mean()), aoi, rate, se_aoi, se_rate
    )


def _threshold_table(t: DtrThresholds) -> np.ndarray:
    # Clipping at (delta1 + 1, delta2) preserves both threshold comparisons,
    # so this small table is the exact rule on the whole unbounded space.
    space = TruncatedStateSpace(max(2, t.delta1 + 1), max(2, t.delta2))
    acts = ((space.ks <= t.delta1) & (space.ds >= t.delta2)).astype(np.uint8)
    return DeterministicPolicy(space, acts).action_table()


def simulate(
    policy: DeterministicPolicy | DtrThresholds | MixedPolicy,
    lp: LinkParams,
    cfg: SimConfig,
) -> SimResult:
    """Per-run and pooled estimates of average destination age and rate.

    Table policies extend beyond their truncation caps by saturating the
    lookup, which is exact for switching-type policies.
    """
    if isinstance(policy, MixedPolicy):
        return simulate_mixed(policy, lp, cfg)
    if isinstance(policy, DtrThresholds):
        table = _threshold_table(policy)
    else:
        table = policy.action_table()
    return _collect(table, lp, cfg, _NO_MIX)


def simulate_mixed(mp: MixedPolicy, lp: LinkParams, cfg: SimConfig) -> SimResult:
    """Simulate a two-policy mixture, randomizing per visit at the one
    differing state with probability ``alpha`` on theta1's action."""
    if not mp.differing:
        return _collect(mp.theta1.action_table(), lp, cfg, _NO_MIX)
    s = mp.differing[0]
    a1 = int(mp.theta1.action(s))
    a2 = int(mp.theta2.action(s))
    mix = (s.k, s.d, a1, a2, mp.alpha)
    return _collect(mp.theta2.action_table(), lp, cfg, mix)
