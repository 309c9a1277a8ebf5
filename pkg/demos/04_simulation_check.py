# Monte Carlo sanity pass: run the slot simulator against analytic
# predictions and report z-scores. Nothing here should wander past a few
# standard errors; the perfect-link cell must come out bit-exact.

from relayage import (
    DtrThresholds,
    LinkParams,
    ResourceBudget,
    SimConfig,
    TruncatedStateSpace,
    cmdp_solve,
    dtr_avg_aoi_exact,
    dtr_forwarding_rate,
    policy_long_run_metrics,
    simulate,
)

HORIZON, RUNS = 500_000, 16


def zline(label, got, se, want):
    z = 0.0 if se == 0 else (got - want) / se
    print(f"  {label:<6} sim {got:>10.6f}  predicted {want:>10.6f}  z = {z:+.2f}")


def main():
    print("perfect links, thresholds (1,2): deterministic cycle")
    out = simulate(DtrThresholds(1, 2), LinkParams(1.0, 1.0),
                   SimConfig(horizon=20_000, runs=4, seed=0))
    print(f"  aoi {out.mean_aoi} (want 2.5)   rate {out.mean_forwarding_rate} (want 0.5)")
    print()

    for seed, (p, q, d1, d2) in enumerate(
        [(0.5, 0.5, 1, 4), (0.6, 0.7, 2, 2), (0.3, 0.9, 3, 5)], start=1
    ):
        lp, t = LinkParams(p, q), DtrThresholds(d1, d2)
        out = simulate(t, lp, SimConfig(horizon=HORIZON, runs=RUNS, seed=seed))
        print(f"p={p} q={q} thresholds ({d1},{d2}):")
        zline("aoi", out.mean_aoi, out.se_aoi, dtr_avg_aoi_exact(lp, t))
        zline("rate", out.mean_forwarding_rate, out.se_rate, dtr_forwarding_rate(lp, t))

    lp = LinkParams(0.6, 0.7)
    space = TruncatedStateSpace(120, 120)
    mp = cmdp_solve(lp, ResourceBudget(0.25), space)
    want_aoi, want_rate = policy_long_run_metrics(mp, lp, space)
    out = simulate(mp, lp, SimConfig(horizon=HORIZON, runs=RUNS, seed=9))
    print("optimal mixture at budget 0.25:")
    zline("aoi", out.mean_aoi, out.se_aoi, want_aoi)
    zline("rate", out.mean_forwarding_rate, out.se_rate, want_rate)


if __name__ == "__main__":
    main()
