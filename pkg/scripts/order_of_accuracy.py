#!/usr/bin/env python3
"""L1 error of pure advection (no turning) for every scheme at Courant 0.2.

    python scripts/order_of_accuracy.py [--T 10]
"""
import argparse

import numpy as np

from nonlocal_fv.model import GridSpec, ModelParams, PopulationState, build_kernel_table
from nonlocal_fv.schemes import SchemeId, step


def advection_error(scheme, dx, T, courant=0.2):
    params = ModelParams(lambda1=0.0, lambda2=0.0)
    grid = GridSpec(dx=dx, dt=courant * dx / params.gamma, T=T, L=params.L)
    kt = build_kernel_table(params, grid)
    x = grid.x

    def f(z):
        return 1.0 + 0.5 * np.sin(2 * np.pi * z / grid.L)

    st = PopulationState(f(x), f(x + 3.0))
    for _ in range(grid.nt):
        st = step(scheme, st, params, grid, kt)
    shift = params.gamma * grid.nt * grid.dt
    return grid.dx * np.sum(np.abs(st.u_plus - f(x - shift)) + np.abs(st.u_minus - f(x + 3.0 + shift)))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--levels", type=int, nargs="+", default=[5, 6, 7], help="dx = 2^-level")
    args = ap.parse_args()
    dxs = [2.0**-p for p in args.levels]
    print(f"{'scheme':<14}" + "".join(f"{'E(2^-%d)' % p:>12}" for p in args.levels) + "   orders")
    for scheme in SchemeId:
        e = [advection_error(scheme, dx, args.T) for dx in dxs]
        orders = [np.log2(a / b) for a, b in zip(e, e[1:])]
        print(f"{scheme.value:<14}" + "".join(f"{v:12.3e}" for v in e) + "   " + " ".join(f"{o:.3f}" for o in orders))


if __name__ == "__main__":
    main()
