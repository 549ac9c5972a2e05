#!/usr/bin/env python3
"""Capacity sweep on the unit-parameter two-node market.

Produces the data behind the welfare/surplus/profit-versus-capacity
panels: one CSV row per (capacity, objective), with no-gne rows left
empty so plots show a gap. Also prints the analytic existence partition
for cross-checking the gap edges.
"""

import argparse
from pathlib import Path

from netcournot import TwoNodeParams
from netcournot.cli import SweepSpec, region_report, run_sweep, write_sweep_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--a", type=float, default=1.0)
    parser.add_argument("--b1", type=float, default=1.0)
    parser.add_argument("--b2", type=float, default=0.65)
    parser.add_argument("--c", type=float, default=1.0)
    parser.add_argument("--steps", type=int, default=150)
    parser.add_argument("--out", default="results/capacity_sweep.csv")
    args = parser.parse_args()

    p = TwoNodeParams(a=args.a, b1=args.b1, b2=args.b2, c=args.c)
    hi = 1.5 * p.a / (p.b2 + 2.0 * p.c)
    spec = SweepSpec(start=0.0, stop=hi, steps=args.steps)
    records = run_sweep(p, spec)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = (
        f"capacity sweep f12 in [0, {hi:.17g}] ({args.steps} steps, default "
        f"range [0, 1.5*a/(b2+2c)]); a={p.a:.17g} b1={p.b1:.17g} "
        f"b2={p.b2:.17g} c={p.c:.17g}"
    )
    write_sweep_csv(out, records, meta=meta)
    print(f"wrote {len(records)} rows to {out}")

    report = region_report(p, 0.0, hi)
    print("consumer-surplus existence partition:")
    for iv in report["intervals"]:
        print(f"  [{iv['lo']:.4f}, {iv['hi']:.4f}]  {iv['label']}")


if __name__ == "__main__":
    main()
