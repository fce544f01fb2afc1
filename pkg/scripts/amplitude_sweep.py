#!/usr/bin/env python3
"""Symmetry verdict across initial amplitudes for one scheme and grid.

The default list is 0.001, 0.1, 0.2, ..., 36 (361 runs); at T = 2000 and
dx = 2^-7 each run takes a few CPU-minutes, so use --workers and a coarse
--amplitudes range for a quick look. Finished runs are checkpointed under
--out-dir and skipped on restart.

    python scripts/amplitude_sweep.py --scheme qsa_mc --amplitudes 0.5:10:0.5 --T 500 --workers 4
"""
import argparse
import collections
import logging

from nonlocal_fv.cli import amplitude_range, sweep_hash
from nonlocal_fv.io import OutputBundle, emit
from nonlocal_fv.model import GridSpec
from nonlocal_fv.runner import InitialConditionSpec, RunConfig, default_amplitudes, sweep
from nonlocal_fv.schemes import SchemeId


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scheme", default="upwind")
    ap.add_argument("--dx", type=float, default=2.0**-7)
    ap.add_argument("--dt-ratio", type=float, default=2.0)
    ap.add_argument("--T", type=float, default=2000.0)
    ap.add_argument("--ic", default="sin02", choices=["sin02", "sin04"])
    ap.add_argument("--amplitudes", type=amplitude_range, default=None, help="a:b:step (default: 361 values)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default="out/sweep")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    amps = list(args.amplitudes) if args.amplitudes else default_amplitudes()
    template = RunConfig(
        grid=GridSpec(dx=args.dx, dt=args.dt_ratio * args.dx, T=args.T),
        scheme=SchemeId.parse(args.scheme),
        ic=InitialConditionSpec(args.ic, amps[0]),
    )
    rows = sweep(template, amplitudes=amps, workers=args.workers, checkpoint_dir=args.out_dir)
    path = emit(OutputBundle(sweep_hash(template, amps, None), sweep_rows=rows), args.out_dir)[-1]
    counts = collections.Counter(r.get("label") or "error" for r in rows)
    print(path)
    print(", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))


if __name__ == "__main__":
    main()
