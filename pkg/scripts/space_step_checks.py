#!/usr/bin/env python3
"""Symmetry verdict at amplitude 5 for each scheme and space step, with dt = 2 dx.

    python scripts/space_step_checks.py --schemes upwind qsa_mc --dx 0.015625 --T 2000
"""
import argparse
import logging

from nonlocal_fv.model import GridSpec
from nonlocal_fv.runner import InitialConditionSpec, RunConfig, sweep
from nonlocal_fv.schemes import SchemeId


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--schemes", nargs="+", default=["upwind", "qsa_mc"])
    ap.add_argument("--dx", type=float, nargs="+", default=[2.0**-6])
    ap.add_argument("--amplitude", type=float, default=5.0)
    ap.add_argument("--T", type=float, default=2000.0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    steps = [(dx, 2 * dx) for dx in args.dx]
    print(f"{'scheme':<14}{'dx':>12}  label  peaks  kind")
    for name in args.schemes:
        template = RunConfig(
            grid=GridSpec(dx=steps[0][0], dt=steps[0][1], T=args.T),
            scheme=SchemeId.parse(name),
            ic=InitialConditionSpec("sin02", args.amplitude),
        )
        for row in sweep(template, steps=steps, workers=args.workers):
            if row["error"]:
                print(f"{name:<14}{row['dx']:>12.6g}  error: {row['error']}")
                continue
            print(f"{name:<14}{row['dx']:>12.6g}  {row['label']:<6} {row['peak_count']:<6} {row['solution_kind']}")


if __name__ == "__main__":
    main()
