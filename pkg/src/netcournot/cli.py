"""Command-line harness: single solves, capacity sweeps, existence-region
reports, and point verification.

Sweeps vary the capacity of the single line of a two-node instance and
emit one CSV row per (capacity, objective). Points where no
consumer-surplus equilibrium exists carry status ``no-gne`` with empty
value fields, which renders as a gap when plotted. All floats are
serialized with 17 significant digits so that parsing a file reproduces
the records bit-exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from .equilibrium import (
    GneResult,
    SearchConfig,
    SearchStatus,
    gne_search,
    rebalance_bound,
    search_box,
    verify_gne,
)
from .model import Objective, load_instance, market_outcome
from .twonode import (
    TwoNodeParams,
    classify_existence,
    from_instance,
    point_to_vectors,
    thresholds,
    two_node_instance,
)

SWEEP_COLUMNS = (
    "f12",
    "objective",
    "status",
    "q1",
    "q2",
    "r",
    "w_soc",
    "w_con",
    "profit1",
    "profit2",
    "merch_surplus",
)

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class SweepSpec:
    """Capacity sweep description: grid, objectives, solver overrides."""

    start: float
    stop: float
    steps: int
    objectives: tuple = (
        Objective.SOCIAL_WELFARE,
        Objective.RESIDUAL_SOCIAL_WELFARE,
        Objective.CONSUMER_SURPLUS,
    )
    parameter: str = "f12"
    config: SearchConfig = SearchConfig()

    def __post_init__(self):
        if self.parameter != "f12":
            raise ValueError(f"unsupported sweep parameter {self.parameter!r}")
        if not self.start < self.stop:
            raise ValueError("sweep range must satisfy start < stop")
        if self.steps < 2:
            raise ValueError("sweep needs at least 2 steps")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class SweepRecord:
    """One sweep row. Value fields are None when no equilibrium exists."""

    f12: float
    objective: str
    status: str
    q1: float | None = None
    q2: float | None = None
    r: float | None = None
    w_soc: float | None = None
    w_con: float | None = None
    profit1: float | None = None
    profit2: float | None = None
    merch_surplus: float | None = None


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".17g")


def write_sweep_csv(path, records: list[SweepRecord], meta: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write(f"# {meta}\n")
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    _fmt(rec.f12),
                    rec.objective,
                    rec.status,
                    _fmt(rec.q1),
                    _fmt(rec.q2),
                    _fmt(rec.r),
                    _fmt(rec.w_soc),
                    _fmt(rec.w_con),
                    _fmt(rec.profit1),
                    _fmt(rec.profit2),
                    _fmt(rec.merch_surplus),
                ]
            )


def read_sweep_csv(path) -> list[SweepRecord]:
    records = []
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows)
        if tuple(header) != SWEEP_COLUMNS:
            raise ValueError(f"unexpected sweep header {header}")
        for row in rows:
            values = [None if cell == "" else float(cell) for cell in row[3:]]
            records.append(
                SweepRecord(float(row[0]), row[1], row[2], *values)
            )
    return records


def _record_from_point(
    p: TwoNodeParams, objective: Objective, status: str, q: np.ndarray, r: np.ndarray
) -> SweepRecord:
    net, params = two_node_instance(p)
    out = market_outcome(net, params, q, r)
    return SweepRecord(
        f12=float(p.f) if p.f is not None else math.inf,
        objective=objective.value,
        status=status,
        q1=float(out.q[0]),
        q2=float(out.q[1]),
        r=float(out.r[0]),
        w_soc=out.w_soc,
        w_con=out.w_con,
        profit1=float(out.profits[0]),
        profit2=float(out.profits[1]),
        merch_surplus=out.merch_surplus,
    )


def _boundary_status(p: TwoNodeParams, f: float, scale: float) -> str:
    nudge = 1e-6 * scale
    sides = []
    for f_near in (max(0.0, f - nudge), f + nudge):
        exists = classify_existence(replace(p, f=f_near)).exists
        sides.append("exists" if exists else "no-gne")
    return f"boundary:{sides[0]}|{sides[1]}"


def _sweep_point(p: TwoNodeParams, objective: Objective, config: SearchConfig) -> SweepRecord:
    f = float(p.f)
    status = "exists"
    if objective is Objective.CONSUMER_SURPLUS:
        verdict = classify_existence(p, boundary_tol=BOUNDARY_TOL)
        if verdict.boundary:
            status = _boundary_status(p, f, verdict.thresholds["uncongested"])
        elif not verdict.exists:
            status = "no-gne"
        if not verdict.exists:
            return SweepRecord(f12=f, objective=objective.value, status=status)
        if verdict.equilibrium is not None:
            q, r = point_to_vectors(verdict.equilibrium)
            return _record_from_point(p, objective, status, q, r)
    # numeric path: soc/res always, and con without a closed form
    net, params = two_node_instance(p)
    result = gne_search(net, params, objective, config=config)
    if result.status is SearchStatus.CONVERGED:
        out = result.point
        return _record_from_point(p, objective, status, out.q, out.r)
    return SweepRecord(f12=f, objective=objective.value, status="limit")


def run_sweep(p: TwoNodeParams, spec: SweepSpec) -> list[SweepRecord]:
    """Solve every (capacity, objective) pair on the sweep grid, in order."""
    records = []
    for objective in spec.objectives:
        previous_soc = None
        for f in spec.grid:
            rec = _sweep_point(replace(p, f=float(f)), objective, spec.config)
            records.append(rec)
            if objective is Objective.SOCIAL_WELFARE and rec.w_soc is not None:
                if previous_soc is not None and rec.w_soc < previous_soc - 1e-9:
                    print(
                        f"warning: social welfare decreased at f12={f:.6g} "
                        "under the social-welfare objective",
                        file=sys.stderr,
                    )
                previous_soc = rec.w_soc
    return records


def region_report(p: TwoNodeParams, f_from: float, f_to: float) -> dict:
    """Partition a capacity range into labeled existence intervals."""
    if not 0 <= f_from < f_to:
        raise ValueError("need 0 <= from < to")
    th = thresholds(p)
    points = sorted({f_from, f_to, *(t for t in th.values() if f_from < t < f_to)})
    intervals = []
    for lo, hi in zip(points[:-1], points[1:]):
        verdict = classify_existence(replace(p, f=0.5 * (lo + hi)))
        label = (
            f"exists (condition {verdict.matched_condition})"
            if verdict.exists
            else "no-gne"
        )
        if intervals and intervals[-1]["label"] == label:
            intervals[-1]["hi"] = hi
        else:
            intervals.append({"lo": lo, "hi": hi, "label": label})
    boundaries = []
    for name, t in sorted(th.items(), key=lambda kv: kv[1]):
        if f_from < t < f_to:
            verdict = classify_existence(replace(p, f=t))
            boundaries.append(
                {
                    "f": t,
                    "threshold": name,
                    "exists": verdict.exists,
                    "matched_condition": verdict.matched_condition,
                }
            )
    return {"thresholds": th, "intervals": intervals, "boundaries": boundaries}


# ---------------------------------------------------------------------------
# command-line front end


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(part) for part in text.split(",")])


def _config_from_args(args) -> SearchConfig:
    config = SearchConfig()
    if getattr(args, "tol", None) is not None:
        config = replace(config, point_tol=args.tol, feas_tol=min(args.tol, 1e-9))
    if getattr(args, "max_iter", None) is not None:
        config = replace(config, max_iter=args.max_iter)
    return config


def _load(args):
    path = args.instance
    if path is None:
        raise ValueError("an instance file is required (positional or --instance)")
    return load_instance(path)


def _analytic_summary(net, params, objective) -> dict:
    recognized = from_instance(net, params)
    if recognized is None:
        return {"regime": False}
    p, swapped = recognized
    doc = {"regime": True, "swapped": swapped, "thresholds": thresholds(p)}
    if objective is Objective.CONSUMER_SURPLUS:
        verdict = classify_existence(p)
        doc.update(
            {
                "exists": verdict.exists,
                "matched_condition": verdict.matched_condition,
                "boundary": verdict.boundary,
                "equilibrium": (
                    list(verdict.equilibrium) if verdict.equilibrium else None
                ),
            }
        )
    return doc


def _cmd_solve(args) -> int:
    net, params = _load(args)
    objective = Objective(args.objective)
    config = _config_from_args(args)
    init = None
    if args.init_q is not None or args.init_r is not None:
        q0 = _parse_vector(args.init_q) if args.init_q else np.zeros(net.n)
        r0 = _parse_vector(args.init_r) if args.init_r else np.zeros(net.n)
        init = (q0, r0)
    elif args.seed is not None:
        rng = np.random.default_rng(args.seed)
        box = search_box(net, params)
        rbar = rebalance_bound(net, params)
        init = (rng.uniform(0.0, box), rng.uniform(-rbar, rbar, size=net.n))
    result = gne_search(net, params, objective, init=init, config=config)
    doc = result.to_dict()
    doc["instance"] = str(args.instance)
    doc["objective"] = objective.value
    doc["analytic"] = _analytic_summary(net, params, objective)
    payload = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    print(payload)
    return 0 if result.status is SearchStatus.CONVERGED else 2


def _cmd_sweep(args) -> int:
    net, params = _load(args)
    if net.n != 2:
        raise ValueError("sweep supports two-node instances only")
    recognized = from_instance(net, params)
    if recognized is None:
        raise ValueError(
            "sweep requires the symmetric two-node regime "
            "(equal intercepts and costs, slope ratio in (1, 3])"
        )
    p, _ = recognized
    default_hi = 1.5 * p.a / (p.b2 + 2.0 * p.c)
    start = args.f_from if args.f_from is not None else 0.0
    stop = args.f_to if args.f_to is not None else default_hi
    objectives = tuple(Objective(tag) for tag in args.objectives.split(","))
    spec = SweepSpec(
        start=start,
        stop=stop,
        steps=args.steps,
        objectives=objectives,
        config=_config_from_args(args),
    )
    records = run_sweep(p, spec)
    meta = (
        f"capacity sweep f12 in [{start:.17g}, {stop:.17g}], {args.steps} steps "
        f"(default range is [0, 1.5*a/(b2+2c)]); a={p.a:.17g} b1={p.b1:.17g} "
        f"b2={p.b2:.17g} c={p.c:.17g}"
    )
    write_sweep_csv(args.out, records, meta=meta)
    print(f"wrote {len(records)} rows to {args.out}")
    return 0


def _cmd_region(args) -> int:
    if args.instance is not None:
        net, params = load_instance(args.instance)
        recognized = from_instance(net, params)
        if recognized is None:
            raise ValueError("instance is outside the symmetric two-node regime")
        p = recognized[0]
    else:
        if None in (args.a, args.b1, args.b2, args.c):
            raise ValueError("supply an instance or all of --a --b1 --b2 --c")
        p = TwoNodeParams(a=args.a, b1=args.b1, b2=args.b2, c=args.c)
    hi_default = 1.5 * p.a / (p.b2 + 2.0 * p.c)
    f_from = args.f_from if args.f_from is not None else 0.0
    f_to = args.f_to if args.f_to is not None else hi_default
    report = region_report(p, f_from, f_to)
    print("thresholds:")
    for name, value in sorted(report["thresholds"].items(), key=lambda kv: kv[1]):
        print(f"  {name:>18s} = {value:.6g}")
    print(f"existence partition of [{f_from:.6g}, {f_to:.6g}]:")
    for iv in report["intervals"]:
        print(f"  [{iv['lo']:.6g}, {iv['hi']:.6g}]  {iv['label']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return 0


def _cmd_verify(args) -> int:
    net, params = _load(args)
    objective = Objective(args.objective)
    if args.point is not None:
        with open(args.point) as fh:
            doc = json.load(fh)
        point = doc.get("point") or doc
        q = np.array(point["q"], dtype=float)
        r = np.array(point["r"], dtype=float)
    elif args.q is not None and args.r is not None:
        q = _parse_vector(args.q)
        r = _parse_vector(args.r)
    else:
        raise ValueError("supply --point FILE or both --q and --r")
    tol = args.tol if args.tol is not None else 1e-6
    report = verify_gne(net, params, objective, q, r, tol=tol)
    print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.ok else 2


def _add_common(sub, instance_required=True):
    sub.add_argument("instance_pos", nargs="?", default=None, metavar="INSTANCE",
                     help="instance JSON file")
    sub.add_argument("--instance", default=None, help="instance JSON file")
    sub.add_argument("--tol", type=float, default=None, help="solver tolerance")
    sub.add_argument("--max-iter", type=int, default=None, dest="max_iter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netcournot",
        description=(
            "equilibrium computation for transmission-constrained networked "
            "Cournot markets with a strategic market maker"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="search for an equilibrium")
    _add_common(solve)
    solve.add_argument("--objective", choices=["soc", "res", "con"], required=True)
    solve.add_argument("--out", default=None, help="write the result JSON here")
    solve.add_argument("--seed", type=int, default=None, help="random initial profile")
    solve.add_argument("--init-q", default=None, help="comma-separated initial q")
    solve.add_argument("--init-r", default=None, help="comma-separated initial r")

    sweep = sub.add_parser("sweep", help="capacity sweep to CSV")
    _add_common(sweep)
    sweep.add_argument("--objectives", default="soc,res,con",
                       help="comma-separated subset of soc,res,con")
    sweep.add_argument("--from", dest="f_from", type=float, default=None)
    sweep.add_argument("--to", dest="f_to", type=float, default=None)
    sweep.add_argument("--steps", type=int, default=150)
    sweep.add_argument("--out", required=True, help="output CSV path")

    region = sub.add_parser("region", help="existence partition of a capacity range")
    _add_common(region)
    region.add_argument("--a", type=float, default=None)
    region.add_argument("--b1", type=float, default=None)
    region.add_argument("--b2", type=float, default=None)
    region.add_argument("--c", type=float, default=None)
    region.add_argument("--from", dest="f_from", type=float, default=None)
    region.add_argument("--to", dest="f_to", type=float, default=None)
    region.add_argument("--out", default=None, help="write the report JSON here")

    verify = sub.add_parser("verify", help="check a candidate point")
    _add_common(verify)
    verify.add_argument("--objective", choices=["soc", "res", "con"], required=True)
    verify.add_argument("--point", default=None, help="result JSON with a point")
    verify.add_argument("--q", default=None, help="comma-separated production")
    verify.add_argument("--r", default=None, help="comma-separated re-balancing")

    return parser


_COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "region": _cmd_region,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "instance", None) is None:
        args.instance = getattr(args, "instance_pos", None)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
