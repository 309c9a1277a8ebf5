"""Numerical ground truth for the double-threshold chain.

Builds the policy-induced chain on a truncated box and solves its
stationary distribution directly, independently of every closed form, so
the formulas in :mod:`relayage.dtr` can be validated rather than trusted.
Also checks the per-column and first-row recursions that the stationary
distribution must satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .dtr import DtrThresholds, dtr_policy
from .markov import stationary_distribution, transition_matrix
from .model import LinkParams, SystemState, TruncatedStateSpace


@dataclass(frozen=True)
class TruncatedChain:
    space: TruncatedStateSpace
    matrix: sparse.csr_matrix  # row-stochastic
    policy_tag: str
    thresholds: DtrThresholds
    params: LinkParams


@dataclass(frozen=True)
class OracleReport:
    """Everything the stationary solve certifies about one parameter point."""

    chain: TruncatedChain
    stationary: np.ndarray
    residual: float
    avg_aoi: float
    forwarding_rate: float
    subspace_terms: tuple[float, float, float]

    def probability(self, k: int, d: int) -> float:
        return float(self.stationary[self.chain.space.index_of(k, d)])


def build_chain(t: DtrThresholds, lp: LinkParams, space: TruncatedStateSpace) -> TruncatedChain:
    if space.k_max <= t.delta1 + 1 or space.d_max <= t.delta2 + 2:
        raise ValueError(
            f"caps ({space.k_max}, {space.d_max}) too small for thresholds {t}"
        )
    P = transition_matrix(space, dtr_policy(space, t).actions, lp)
    tag = f"dtr(delta1={t.delta1}, delta2={t.delta2})"
    return TruncatedChain(space, P, tag, t, lp)


def solve_stationary(chain: TruncatedChain) -> OracleReport:
    """Solve pi P = pi, sum pi = 1 and derive all metrics from the solution."""
    pi, residual = stationary_distribution(chain.matrix)
    sp_ = chain.space
    ks, ds = sp_.ks, sp_.ds
    t = chain.thresholds
    avg_aoi = float(((ks + ds) * pi).sum())
    rate = float(pi[(ks <= t.delta1) & (ds >= t.delta2)].sum())
    zero = float((ks * pi)[ds == 0].sum())
    low_mask = (ds >= 2) & (ds <= t.delta2 - 1)
    low = float(((ks + ds) * pi)[low_mask].sum())
    high = float(((ks + ds) * pi)[ds >= t.delta2].sum())
    return OracleReport(chain, pi, residual, avg_aoi, rate, (zero, low, high))


@dataclass(frozen=True)
class RecurrenceViolation:
    rule: str
    state: SystemState
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def verify_lemma_recurrences(
    lp: LinkParams,
    t: DtrThresholds,
    report: OracleReport,
    tol: float = 1e-9,
    k_lim: int | None = None,
    d_lim: int | None = None,
    include_approximate: bool = False,
) -> list[RecurrenceViolation]:
    """Check the solved distribution against the structural recursions.

    Covers: low-gain column decay at rate 1-p; high-gain column decay at
    rate 1-q then 1-p; the zero-gain column recursion with its geometric
    injection; the first-row recursions for both gain ranges. The truncated
    high-gain first-row recursion is exact only when delta1 <= delta2 - 1
    and is skipped otherwise; pass ``include_approximate`` to report its
    residuals anyway, which measure the closed forms' approximation error.

    Checks run on a window away from the caps so saturation does not
    contaminate the identities.
    """
    sp_ = report.chain.space
    p, q, d1, d2 = lp.p, lp.q, t.delta1, t.delta2
    pi = report.stationary
    x = float(pi[sp_.index_of(2, 0)])
    k_hi = k_lim if k_lim is not None else min(sp_.k_max - 2, max(3 * (d1 + 2), 40))
    d_hi = d_lim if d_lim is not None else min(sp_.d_max - 2, max(d2 + 4 * (d1 + 1), 40))
    out: list[RecurrenceViolation] = []

    def check(rule, k, d, lhs, rhs):
        if abs(lhs - rhs) > tol:
            out.append(RecurrenceViolation(rule, SystemState(k, d), lhs, rhs))

    def at(k, d):
        return float(pi[sp_.index_of(k, d)])

    # low-gain columns: pi(k, d) = (1-p) pi(k-1, d), 2 <= d <= delta2-1
    for d in range(2, min(d2 - 1, d_hi) + 1):
        for k in range(2, k_hi + 1):
            check("low-gain-column", k, d, at(k, d), (1 - p) * at(k - 1, d))

    # high-gain columns: rate 1-q while k <= delta1+1, then rate 1-p
    for d in range(d2, d_hi + 1):
        for k in range(2, k_hi + 1):
            rate = (1 - q) if k <= d1 + 1 else (1 - p)
            check("high-gain-column", k, d, at(k, d), rate * at(k - 1, d))

    # zero-gain column: injection x(1-q)^(k-2) while k <= delta1+1
    for k in range(3, k_hi + 1):
        inj = x * (1 - q) ** (k - 2) if k <= d1 + 1 else 0.0
        check("zero-gain-column", k, 0, at(k, 0), (1 - p) * at(k - 1, 0) + inj)

    # first row, low gain: pi(1, d) = p * (total mass arriving at gain d)
    for d in range(2, min(d2, d_hi, sp_.k_max - 1) + 1):
        sources = at(d, 0) if d >= 2 else 0.0
        sources += sum(at(d - g, g) for g in range(2, d - 1 + 1) if d - g >= 1 and g <= d2 - 1)
        check("first-row-low-gain", 1, d, at(1, d), p * sources)

    # first row, high gain: receive-side arrivals only; exact identity
    for d in range(d2 + 1, min(d_hi, sp_.k_max - 1) + 1):
        sources = at(d, 0)
        for g in range(2, d - 1 + 1):
            k_src = d - g
            if k_src < 1:
                continue
            if g <= d2 - 1 or k_src > d1:  # receive states only
                sources += at(k_src, g)
        check("first-row-high-gain", 1, d, at(1, d), p * sources)

    # high-gain first-row recursion as the closed forms use it
    if d1 <= d2 - 1 or include_approximate:
        for d in range(d2 + 1, d_hi + 1):
            rhs = (1 - p) * at(1, d - 1)
            if d >= d1 + d2 + 1:
                rhs += p * (1 - q) ** d1 * at(1, d - d1 - 1)
            check("first-row-recursion", 1, d, at(1, d), rhs)

    return out


def power_iteration(
    chain: TruncatedChain,
    tol: float = 1e-12,
    max_iterations: int = 1_000_000,
    damping: float = 0.5,
) -> np.ndarray:
    """Stationary distribution by damped power iteration.

    Secondary instrument: slower than the linear solve but shares none of
    its machinery, so agreement between the two certifies both. Damping
    handles periodic chains (p = q = 1 cycles).
    """
    P = chain.matrix
    n = chain.space.n_states
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iterations):
        nxt = damping * pi + (1.0 - damping) * (pi @ P)
        delta = np.abs(nxt - pi).max()
        pi = nxt
        if delta <= tol:
            break
    return pi / pi.sum()
