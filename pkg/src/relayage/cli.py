"""Command-line front end: solvers, evaluators, oracle checks, simulations.

Every subcommand walks a parameter grid, collects one record per cell
(cells run in submission order, optionally across worker processes), and
writes CSV (default) or JSON. Approximate values carry ``exact=false``.
Cells that fail leave a diagnostic record and flip the exit status while
the remaining cells still run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import product

from .cmdp import DEFAULT_CAP, cmdp_solve
from .dtr import (
    DtrThresholds,
    NoFeasibleThresholds,
    dtr_avg_aoi,
    dtr_avg_aoi_exact,
    dtr_forwarding_rate,
    dtr_policy,
    optimize_thresholds,
)
from .markov import policy_long_run_metrics
from .model import LinkParams, ResourceBudget, TruncatedStateSpace
from .oracle import build_chain, solve_stationary, verify_lemma_recurrences
from .policies import verify_switching_structure
from .rvi import RviConfig
from .sim import SimConfig, simulate, simulate_mixed

ORACLE_CAP = 600


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _write_rows(rows: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(rows, indent=2, default=str) + "\n"
    else:
        buf = io.StringIO()
        header: list[str] = []
        for row in rows:
            for key in row:
                if key not in header:
                    header.append(key)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in header])
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_cells(cells, worker, workers: int) -> tuple[list[dict], int]:
    """Map worker over cells, ordered; failures become diagnostic rows."""
    failures = 0
    rows: list[dict] = []
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(worker, cells))
    else:
        results = [worker(cell) for cell in cells]
    for res in results:
        batch = res if isinstance(res, list) else [res]
        rows.extend(batch)
        failures += sum(1 for r in batch if r.get("status") == "error")
    return rows, failures


# ---------------------------------------------------------------------------
# per-cell workers (module-level so ProcessPoolExecutor can pickle them)


def _cell_eval_dtr(cell) -> dict:
    p, q, d1, d2 = cell
    lp = LinkParams(p, q)
    t = DtrThresholds(d1, d2)
    try:
        aoi = dtr_avg_aoi(lp, t)
        return {
            "p": p, "q": q, "delta1": d1, "delta2": d2,
            "avg_aoi": aoi.value, "exact": aoi.exact,
            "avg_aoi_exact": dtr_avg_aoi_exact(lp, t),
            "forwarding_rate": dtr_forwarding_rate(lp, t),
            "status": "ok",
        }
    except Exception as exc:  # pragma: no cover - diagnostic path
        return {"p": p, "q": q, "delta1": d1, "delta2": d2,
                "status": "error", "message": str(exc)}


def _cell_oracle(cell) -> dict:
    p, q, d1, d2, kmax, dmax, full = cell
    lp = LinkParams(p, q)
    t = DtrThresholds(d1, d2)
    try:
        space = TruncatedStateSpace(kmax, dmax)
        report = solve_stationary(build_chain(t, lp, space))
        row = {
            "p": p, "q": q, "delta1": d1, "delta2": d2,
            "kmax": kmax, "dmax": dmax,
            "avg_aoi": report.avg_aoi,
            "forwarding_rate": report.forwarding_rate,
            "residual": report.residual,
            "exact": True, "status": "ok",
        }
        if full:
            row["distribution"] = [
                [int(space.ks[i]), int(space.ds[i]), float(report.stationary[i])]
                for i in range(space.n_states)
            ]
        return row
    except Exception as exc:
        return {"p": p, "q": q, "delta1": d1, "delta2": d2,
                "kmax": kmax, "dmax": dmax,
                "status": "error", "message": str(exc)}


def _cell_solve_cmdp(cell):
    p, q, eta, kmax, dmax, tol, grid = cell
    lp = LinkParams(p, q)
    space = TruncatedStateSpace(kmax, dmax)
    base = {"p": p, "q": q, "eta_c": eta}
    try:
        mp = cmdp_solve(lp, ResourceBudget(eta), space, multiplier_tol=tol)
    except Exception as exc:
        return [dict(base, status="error", message=str(exc))]
    if grid:
        rows = []
        diff = set(mp.differing)
        for i in range(space.n_states):
            s = space.state_at(i)
            a1 = int(mp.theta1.actions[i])
            a2 = int(mp.theta2.actions[i])
            label = "mix" if s in diff else ("forward" if a1 else "receive")
            rows.append(dict(base, k=s.k, d=s.d, action=label,
                             alpha=mp.alpha if s in diff else None))
        return rows
    aoi, rate = policy_long_run_metrics(mp, lp, space)
    s = mp.differing[0] if mp.differing else None
    violations = len(verify_switching_structure(mp.theta1)) + len(
        verify_switching_structure(mp.theta2))
    return [dict(
        base,
        avg_aoi=aoi, forwarding_rate=rate, alpha=mp.alpha,
        lambda1=mp.lambda1, lambda2=mp.lambda2,
        rate1=mp.rate1, rate2=mp.rate2,
        differing_k=s.k if s else None, differing_d=s.d if s else None,
        switching_violations=violations, exact=True, status="ok",
    )]


def _cell_optimize_dtr(cell) -> dict:
    p, q, eta, d1_hi, d2_hi = cell
    lp = LinkParams(p, q)
    base = {"p": p, "q": q, "eta_c": eta}
    try:
        t, aoi = optimize_thresholds(lp, ResourceBudget(eta), d1_hi, d2_hi)
    except NoFeasibleThresholds as exc:
        return dict(base, status="error", message=str(exc),
                    min_rate=exc.min_rate)
    return dict(
        base, delta1=t.delta1, delta2=t.delta2,
        avg_aoi=aoi.value, exact=aoi.exact,
        avg_aoi_exact=dtr_avg_aoi_exact(lp, t),
        forwarding_rate=dtr_forwarding_rate(lp, t), status="ok",
    )


def _cell_simulate(cell) -> dict:
    p, q, d1, d2, eta, kmax, dmax, horizon, runs, seed = cell
    lp = LinkParams(p, q)
    cfg = SimConfig(horizon=horizon, runs=runs, seed=seed)
    base = {"p": p, "q": q, "horizon": horizon, "runs": runs, "seed": seed}
    try:
        if eta is not None:
            space = TruncatedStateSpace(kmax, dmax)
            mp = cmdp_solve(lp, ResourceBudget(eta), space)
            res = simulate_mixed(mp, lp, cfg)
            base.update(policy=f"cmdp(eta_c={eta})", eta_c=eta)
        else:
            res = simulate(DtrThresholds(d1, d2), lp, cfg)
            base.update(policy=f"dtr({d1},{d2})", delta1=d1, delta2=d2)
    except Exception as exc:
        return dict(base, status="error", message=str(exc))
    return dict(
        base, mean_aoi=res.mean_aoi, se_aoi=res.se_aoi,
        mean_forwarding_rate=res.mean_forwarding_rate, se_rate=res.se_rate,
        status="ok",
    )


def _cell_verify(cell) -> dict:
    p, q, d1, d2, kmax, dmax, tol = cell
    lp = LinkParams(p, q)
    t = DtrThresholds(d1, d2)
    base = {"p": p, "q": q, "delta1": d1, "delta2": d2}
    try:
        report = solve_stationary(build_chain(t, lp, TruncatedStateSpace(kmax, dmax)))
        recs = verify_lemma_recurrences(lp, t, report, tol=tol)
        aoi = dtr_avg_aoi(lp, t)
        aoi_exact = dtr_avg_aoi_exact(lp, t)
        rate = dtr_forwarding_rate(lp, t)
        checks = {
            "recurrences": len(recs),
            "max_recurrence_gap": max((v.gap for v in recs), default=0.0),
            "rate_gap": abs(rate - report.forwarding_rate),
            "exact_aoi_gap": abs(aoi_exact - report.avg_aoi),
            "closed_form_rel_err": abs(aoi.value - report.avg_aoi) / report.avg_aoi,
            "closed_form_exact": aoi.exact,
        }
        bad = (
            checks["recurrences"] > 0
            or checks["rate_gap"] > 1e-7
            or checks["exact_aoi_gap"] > 1e-7
            or (aoi.exact and abs(aoi.value - report.avg_aoi) > 1e-7)
        )
        structure = verify_switching_structure(dtr_policy(report.chain.space, t))
        bad = bad or bool(structure)
        checks["structure_violations"] = len(structure)
        return dict(base, **checks, status="violation" if bad else "ok")
    except Exception as exc:
        return dict(base, status="error", message=str(exc))


def _cell_compare(cell) -> dict:
    p, q, eta, kmax, dmax = cell
    lp = LinkParams(p, q)
    base = {"p": p, "q": q, "eta_c": eta}
    try:
        space = TruncatedStateSpace(kmax, dmax)
        mp = cmdp_solve(lp, ResourceBudget(eta), space)
        cmdp_aoi, cmdp_rate = policy_long_run_metrics(mp, lp, space)
        t, _ = optimize_thresholds(lp, ResourceBudget(eta))
        dtr_aoi = dtr_avg_aoi_exact(lp, t)
    except Exception as exc:
        return dict(base, status="error", message=str(exc))
    return dict(
        base, cmdp_avg_aoi=cmdp_aoi, cmdp_rate=cmdp_rate,
        dtr_delta1=t.delta1, dtr_delta2=t.delta2, dtr_avg_aoi=dtr_aoi,
        dtr_rate=dtr_forwarding_rate(lp, t),
        ratio=dtr_aoi / cmdp_aoi, exact=True, status="ok",
    )


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(sub, *, caps: int) -> None:
    sub.add_argument("--p", type=_floats, default=[0.6])
    sub.add_argument("--q", type=_floats, default=[0.7])
    sub.add_argument("--kmax", type=int, default=caps)
    sub.add_argument("--dmax", type=int, default=caps)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="relayage",
        description="Two-hop status-update scheduling: solvers, closed forms, "
        "oracle checks, and simulation.",
    )
    subs = ap.add_subparsers(dest="command", required=True)

    s = subs.add_parser("solve-cmdp", help="constrained solver over a parameter grid")
    _add_common(s, caps=DEFAULT_CAP)
    s.add_argument("--eta-c", type=_floats, default=[0.45])
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--policy-grid", action="store_true",
                   help="emit one row per state instead of a summary row")

    s = subs.add_parser("eval-dtr", help="closed-form threshold-policy metrics")
    _add_common(s, caps=DEFAULT_CAP)
    s.add_argument("--delta1", type=_ints, default=[1])
    s.add_argument("--delta2", type=_ints, default=[2])

    s = subs.add_parser("optimize-dtr", help="best feasible thresholds per cell")
    _add_common(s, caps=DEFAULT_CAP)
    s.add_argument("--eta-c", type=_floats, default=[0.45])
    s.add_argument("--delta1-max", type=int, default=60)
    s.add_argument("--delta2-max", type=int, default=60)

    s = subs.add_parser("oracle", help="truncated-chain stationary solve")
    _add_common(s, caps=ORACLE_CAP)
    s.add_argument("--delta1", type=_ints, default=[1])
    s.add_argument("--delta2", type=_ints, default=[2])
    s.add_argument("--full-distribution", action="store_true",
                   help="include the per-state stationary vector (json output)")

    s = subs.add_parser("simulate", help="Monte Carlo runs for DTR or CMDP policies")
    _add_common(s, caps=DEFAULT_CAP)
    s.add_argument("--delta1", type=_ints, default=[1])
    s.add_argument("--delta2", type=_ints, default=[2])
    s.add_argument("--eta-c", type=_floats, default=None,
                   help="simulate the CMDP mixture instead of DTR thresholds")
    s.add_argument("--horizon", type=int, default=1_000_000)
    s.add_argument("--runs", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)

    s = subs.add_parser("verify", help="invariant suites; nonzero exit on violations")
    _add_common(s, caps=ORACLE_CAP)
    s.add_argument("--delta1", type=_ints, default=[1, 2, 3])
    s.add_argument("--delta2", type=_ints, default=[3, 4, 5])
    s.add_argument("--tol", type=float, default=1e-9)

    s = subs.add_parser("compare", help="optimized DTR vs CMDP mixture per cell")
    _add_common(s, caps=DEFAULT_CAP)
    s.add_argument("--eta-c", type=_floats, default=[0.25, 0.45, 0.65])

    s = subs.add_parser("sweep", help="predefined experiment grids")
    _add_common(s, caps=DEFAULT_CAP)
    s.add_argument("--preset", required=True,
                   choices=("aoi-vs-q", "aoi-vs-thresholds", "dtr-vs-cmdp"))
    return ap


def _validate(ap: argparse.ArgumentParser, args) -> None:
    for name, lo, hi in (("p", 0.0, 1.0), ("q", 0.0, 1.0)):
        for v in getattr(args, name, None) or []:
            if not (lo < v <= hi):
                ap.error(f"--{name} values must lie in ({lo}, {hi}]: got {v}")
    for v in getattr(args, "eta_c", None) or []:
        if not (0.0 < v <= 1.0):
            ap.error(f"--eta-c values must lie in (0, 1]: got {v}")
    for v in getattr(args, "delta1", None) or []:
        if v < 1:
            ap.error(f"--delta1 values must be >= 1: got {v}")
    for v in getattr(args, "delta2", None) or []:
        if v < 2:
            ap.error(f"--delta2 values must be >= 2: got {v}")
    for name in ("kmax", "dmax"):
        v = getattr(args, name, None)
        if v is not None and v < 2:
            ap.error(f"--{name} must be >= 2: got {v}")
    for name in ("horizon", "runs", "workers"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            ap.error(f"--{name} must be >= 1: got {v}")


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _validate(ap, args)
    cmd = args.command

    if cmd == "eval-dtr":
        cells = list(product(args.p, args.q, args.delta1, args.delta2))
        rows, failures = _run_cells(cells, _cell_eval_dtr, args.workers)
    elif cmd == "oracle":
        cells = [c + (args.kmax, args.dmax, args.full_distribution)
                 for c in product(args.p, args.q, args.delta1, args.delta2)]
        rows, failures = _run_cells(cells, _cell_oracle, args.workers)
    elif cmd == "solve-cmdp":
        cells = [c + (args.kmax, args.dmax, args.tol, args.policy_grid)
                 for c in product(args.p, args.q, args.eta_c)]
        rows, failures = _run_cells(cells, _cell_solve_cmdp, args.workers)
    elif cmd == "optimize-dtr":
        cells = [c + (args.delta1_max, args.delta2_max)
                 for c in product(args.p, args.q, args.eta_c)]
        rows, failures = _run_cells(cells, _cell_optimize_dtr, args.workers)
    elif cmd == "simulate":
        etas = args.eta_c if args.eta_c is not None else [None]
        cells = [(p, q, d1, d2, eta, args.kmax, args.dmax,
                  args.horizon, args.runs, args.seed)
                 for p, q, d1, d2, eta in product(
                     args.p, args.q, args.delta1, args.delta2, etas)]
        rows, failures = _run_cells(cells, _cell_simulate, args.workers)
    elif cmd == "verify":
        cells = [c + (args.kmax, args.dmax, args.tol)
                 for c in product(args.p, args.q, args.delta1, args.delta2)]
        rows, failures = _run_cells(cells, _cell_verify, args.workers)
        failures += sum(1 for r in rows if r.get("status") == "violation")
    elif cmd == "compare":
        cells = [c + (args.kmax, args.dmax)
                 for c in product(args.p, args.q, args.eta_c)]
        rows, failures = _run_cells(cells, _cell_compare, args.workers)
    else:  # sweep
        rows, failures = _run_sweep(args)

    _write_rows(rows, args.format, args.out)
    return 1 if failures else 0


def _run_sweep(args) -> tuple[list[dict], int]:
    if args.preset == "aoi-vs-q":
        qs = [round(0.3 + 0.05 * i, 2) for i in range(15)]
        cells = [(p, q, d1, d2) for p, q, d1, d2 in product(
            args.p, qs, [1, 2, 3], [2, 4])]
        return _run_cells(cells, _cell_eval_dtr, args.workers)
    if args.preset == "aoi-vs-thresholds":
        cells = [(p, q, d1, d2) for p, q, d1, d2 in product(
            args.p, args.q, range(1, 9), range(2, 9))]
        return _run_cells(cells, _cell_eval_dtr, args.workers)
    # dtr-vs-cmdp
    cells = [c + (args.kmax, args.dmax)
             for c in product(args.p, args.q, [0.25, 0.45, 0.65])]
    return _run_cells(cells, _cell_compare, args.workers)


if __name__ == "__main__":
    sys.exit(main())
