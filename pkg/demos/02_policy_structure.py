# Solve the forwarding-rate-constrained problem at a few budgets and draw
# the optimal decision map near the origin. Rows are relay age k, columns
# are the age gain d. Expect a staircase: forward (F) where the gain is
# large and the relay copy is fresh, receive (.) elsewhere, with at most
# one randomized cell (*) gluing the two bisection endpoints together.

from relayage import (
    LinkParams,
    ResourceBudget,
    TruncatedStateSpace,
    cmdp_solve,
    policy_long_run_metrics,
)

LP = LinkParams(0.6, 0.7)
SPACE = TruncatedStateSpace(120, 120)
K_SHOW, D_SHOW = 12, 14


def draw(mp):
    diff = set(mp.differing)
    print("     d=0 " + " ".join(f"{d:>2}" for d in range(2, D_SHOW + 1)))
    for k in range(1, K_SHOW + 1):
        cells = []
        for d in [0, *range(2, D_SHOW + 1)]:
            if (k, d) == (1, 0) or d == 1:
                cells.append("  ")
                continue
            try:
                i = SPACE.index_of(k, d)
            except ValueError:
                cells.append("  ")
                continue
            s = SPACE.state_at(i)
            if s in diff:
                cells.append(" *")
            elif mp.theta1.actions[i]:
                cells.append(" F")
            else:
                cells.append(" .")
        print(f"k={k:>2} " + " ".join(c.strip().rjust(2) for c in cells))


def main():
    for eta in (0.25, 0.45, 0.65):
        mp = cmdp_solve(LP, ResourceBudget(eta), SPACE)
        aoi, rate = policy_long_run_metrics(mp, LP, SPACE)
        print(f"budget eta_c = {eta}")
        print(
            f"  aoi = {aoi:.6f}  rate = {rate:.6f}  alpha = {mp.alpha:.6f}  "
            f"multiplier in [{mp.lambda1:.4f}, {mp.lambda2:.4f}]"
        )
        if mp.differing:
            s = mp.differing[0]
            print(f"  randomized state: (k={s.k}, d={s.d})")
        else:
            print("  constraint slack; deterministic policy")
        draw(mp)
        print()


if __name__ == "__main__":
    main()
