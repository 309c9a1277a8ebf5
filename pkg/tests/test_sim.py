"""Slot-level Monte Carlo engine against closed forms and itself."""

import dataclasses

import numpy as np
import pytest

from relayage import (
    Action,
    DeterministicPolicy,
    DtrThresholds,
    LinkParams,
    MixedPolicy,
    ResourceBudget,
    SimConfig,
    SystemState,
    TruncatedStateSpace,
    cmdp_solve,
    dtr_avg_aoi,
    dtr_forwarding_rate,
    dtr_policy,
    policy_long_run_metrics,
    simulate,
    simulate_mixed,
)


def _manual_mixture(alpha):
    space = TruncatedStateSpace(30, 30)
    theta1 = dtr_policy(space, DtrThresholds(2, 2))
    actions2 = theta1.actions.copy()
    actions2[space.index_of(2, 2)] = Action.RECEIVE.value
    theta2 = DeterministicPolicy(space, actions2)
    return MixedPolicy(
        theta1=theta1, theta2=theta2, alpha=alpha, differing=(SystemState(2, 2),)
    )


class TestPerfectLinks:
    def test_cycle_statistics_are_exact(self):
        cfg = SimConfig(horizon=10_000, runs=3, seed=7)
        out = simulate(DtrThresholds(1, 2), LinkParams(1.0, 1.0), cfg)
        assert out.mean_aoi == 2.5
        assert out.mean_forwarding_rate == 0.5
        assert np.all(out.aoi_per_run == 2.5)
        assert np.all(out.rate_per_run == 0.5)


class TestAgainstClosedForms:
    def test_exact_branch_within_three_se(self):
        lp, t = LinkParams(0.5, 0.5), DtrThresholds(1, 4)
        cfg = SimConfig(horizon=200_000, runs=12, seed=11)
        out = simulate(t, lp, cfg)
        want_aoi = dtr_avg_aoi(lp, t).value
        want_rate = dtr_forwarding_rate(lp, t)
        assert abs(out.mean_aoi - want_aoi) <= 3 * out.se_aoi
        assert abs(out.mean_forwarding_rate - want_rate) <= 3 * out.se_rate

    def test_approximate_regime_uses_true_rate(self):
        lp, t = LinkParams(0.6, 0.7), DtrThresholds(3, 2)
        cfg = SimConfig(horizon=200_000, runs=12, seed=13)
        out = simulate(t, lp, cfg)
        assert abs(out.mean_forwarding_rate - dtr_forwarding_rate(lp, t)) <= 3 * out.se_rate


class TestDeterminism:
    def test_same_config_is_bitwise_identical(self):
        lp, t = LinkParams(0.4, 0.8), DtrThresholds(2, 3)
        cfg = SimConfig(horizon=50_000, runs=4, seed=99)
        a = simulate(t, lp, cfg)
        b = simulate(t, lp, cfg)
        assert np.array_equal(a.aoi_per_run, b.aoi_per_run)
        assert np.array_equal(a.rate_per_run, b.rate_per_run)

    def test_seed_changes_output(self):
        lp, t = LinkParams(0.4, 0.8), DtrThresholds(2, 3)
        a = simulate(t, lp, SimConfig(horizon=50_000, runs=4, seed=1))
        b = simulate(t, lp, SimConfig(horizon=50_000, runs=4, seed=2))
        assert not np.array_equal(a.aoi_per_run, b.aoi_per_run)

    def test_policy_object_matches_thresholds(self):
        # table lookup must not depend on how the policy was provided
        lp, t = LinkParams(0.4, 0.8), DtrThresholds(2, 3)
        cfg = SimConfig(horizon=50_000, runs=4, seed=5)
        space = TruncatedStateSpace(40, 40)
        a = simulate(t, lp, cfg)
        b = simulate(dtr_policy(space, t), lp, cfg)
        assert np.array_equal(a.aoi_per_run, b.aoi_per_run)
        assert np.array_equal(a.rate_per_run, b.rate_per_run)


class TestMixedPolicies:
    def test_degenerate_alphas_reduce_to_constituents(self):
        lp = LinkParams(0.6, 0.7)
        cfg = SimConfig(horizon=50_000, runs=4, seed=21)
        mp1 = _manual_mixture(1.0)
        pure1 = simulate(mp1.theta1, lp, cfg)
        assert np.array_equal(simulate_mixed(mp1, lp, cfg).aoi_per_run, pure1.aoi_per_run)

        mp0 = _manual_mixture(0.0)
        pure2 = simulate(mp0.theta2, lp, cfg)
        assert np.array_equal(simulate_mixed(mp0, lp, cfg).aoi_per_run, pure2.aoi_per_run)

    def test_interior_alpha_lands_between(self):
        lp = LinkParams(0.6, 0.7)
        cfg = SimConfig(horizon=300_000, runs=8, seed=23)
        lo = simulate(_manual_mixture(0.0).theta2, lp, cfg).mean_forwarding_rate
        hi = simulate(_manual_mixture(1.0).theta1, lp, cfg).mean_forwarding_rate
        mid = simulate_mixed(_manual_mixture(0.5), lp, cfg).mean_forwarding_rate
        assert min(lo, hi) < mid < max(lo, hi)

    def test_solver_mixture_hits_budget_and_cost(self):
        lp, eta = LinkParams(0.6, 0.7), 0.45
        mp = cmdp_solve(lp, ResourceBudget(eta), TruncatedStateSpace(120, 120))
        want_aoi, want_rate = policy_long_run_metrics(mp, lp)
        out = simulate(mp, lp, SimConfig(horizon=400_000, runs=10, seed=29))
        assert abs(out.mean_forwarding_rate - want_rate) <= 3 * out.se_rate
        assert abs(out.mean_aoi - want_aoi) <= 3 * out.se_aoi

    def test_dispatch_and_direct_entry_agree(self):
        lp = LinkParams(0.6, 0.7)
        cfg = SimConfig(horizon=20_000, runs=3, seed=31)
        mp = _manual_mixture(0.3)
        a = simulate(mp, lp, cfg)
        b = simulate_mixed(mp, lp, cfg)
        assert np.array_equal(a.aoi_per_run, b.aoi_per_run)


class TestStatistics:
    def test_single_run_has_no_spread_estimate(self):
        out = simulate(
            DtrThresholds(1, 3), LinkParams(0.5, 0.5), SimConfig(horizon=10_000, runs=1, seed=3)
        )
        assert np.isnan(out.se_aoi) and np.isnan(out.se_rate)

    def test_ranges(self):
        out = simulate(
            DtrThresholds(2, 3), LinkParams(0.3, 0.9), SimConfig(horizon=30_000, runs=5, seed=17)
        )
        assert out.mean_aoi >= 2.0
        assert 0.0 <= out.mean_forwarding_rate <= 1.0
        assert out.aoi_per_run.shape == (5,)
        assert out.rate_per_run.shape == (5,)

    def test_se_is_sample_standard_error(self):
        out = simulate(
            DtrThresholds(2, 3), LinkParams(0.3, 0.9), SimConfig(horizon=30_000, runs=5, seed=17)
        )
        assert out.se_aoi == pytest.approx(out.aoi_per_run.std(ddof=1) / np.sqrt(5))
        assert out.se_rate == pytest.approx(out.rate_per_run.std(ddof=1) / np.sqrt(5))


class TestConfigValidation:
    def test_horizon_positive(self):
        with pytest.raises(ValueError):
            SimConfig(horizon=0)

    def test_runs_positive(self):
        with pytest.raises(ValueError):
            SimConfig(runs=0)

    def test_initial_state_must_be_valid(self):
        with pytest.raises(ValueError):
            SimConfig(initial_state=SystemState(1, 1))

    def test_frozen(self):
        cfg = SimConfig()
        with pytest.raises((AttributeError, dataclasses.FrozenInstanceError)):
            cfg.horizon = 5
