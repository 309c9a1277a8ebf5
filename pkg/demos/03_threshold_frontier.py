# Trace the age/forwarding-rate frontier two ways: the optimal randomized
# policy from the constrained solver, and the best double-threshold pair
# found by exhaustive search. The threshold family stays within a few
# percent of optimal across the whole budget range.

import numpy as np

from relayage import (
    LinkParams,
    NoFeasibleThresholds,
    ResourceBudget,
    TruncatedStateSpace,
    cmdp_solve,
    dtr_avg_aoi_exact,
    dtr_forwarding_rate,
    optimize_thresholds,
    policy_long_run_metrics,
)

LP = LinkParams(0.6, 0.7)
SPACE = TruncatedStateSpace(120, 120)


def main():
    print(f"links: p = {LP.p}, q = {LP.q}")
    header = (
        f"{'eta_c':>6} {'cmdp aoi':>10} {'cmdp rate':>10} "
        f"{'(d1,d2)':>8} {'dtr aoi':>10} {'dtr rate':>9} {'ratio':>7}"
    )
    print(header)
    print("-" * len(header))
    for eta in np.arange(0.15, 0.66, 0.05):
        eta = round(float(eta), 2)
        mp = cmdp_solve(LP, ResourceBudget(eta), SPACE)
        aoi, rate = policy_long_run_metrics(mp, LP, SPACE)
        try:
            t, _ = optimize_thresholds(LP, ResourceBudget(eta))
        except NoFeasibleThresholds as exc:
            print(f"{eta:>6} {aoi:>10.5f} {rate:>10.5f}  no feasible pair "
                  f"(min rate {exc.min_rate:.4f})")
            continue
        dtr = dtr_avg_aoi_exact(LP, t)
        print(
            f"{eta:>6} {aoi:>10.5f} {rate:>10.5f} "
            f"{f'({t.delta1},{t.delta2})':>8} {dtr:>10.5f} "
            f"{dtr_forwarding_rate(LP, t):>9.5f} {dtr / aoi:>7.4f}"
        )
    print()
    print("ratio = threshold aoi / optimal aoi; the single randomized state of")
    print("the optimal policy buys a few percent wherever the budget binds")


if __name__ == "__main__":
    main()
