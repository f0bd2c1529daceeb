"""Solve every registered model and compare against the available oracle.

Unit orders are checked against RK4, fractional orders against the Adams
predictor-corrector. Deviations are state-wise, relative to max |state|.
"""
import argparse
import time

import numpy as np

from hybridfrac.models import get_model, list_models, model_entry
from hybridfrac.oracles import pece_solve, rk4_solve
from hybridfrac.solver import SolveConfig, solve_hf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.002)
    ap.add_argument("--alpha", type=float, default=None, help="common order; default uses model defaults")
    args = ap.parse_args()
    for name in list_models():
        orders = args.alpha if args.alpha is not None else None
        try:
            system = get_model(name, orders=orders)
        except ValueError as exc:
            print(f"{name:>12}: skipped ({exc})")
            continue
        t0 = time.perf_counter()
        res = solve_hf(system, SolveConfig(h=args.h))
        if np.all(system.orders == 1.0):
            ref, oracle = rk4_solve(system, res.grid).nodes, "rk4"
        else:
            ref, oracle = pece_solve(system, res.grid).nodes, "pece"
        err, scale = np.abs(res.nodes - ref).max(axis=0), np.abs(ref).max(axis=0)
        # identically zero states fall back to the absolute deviation
        dev = np.where(scale > 0, err / np.where(scale > 0, scale, 1.0), err)
        dt = time.perf_counter() - t0
        states = model_entry(name).states
        worst = int(np.argmax(dev))
        c = res.diagnostics.contraction
        verdict = c.status if c is not None else "n/a"
        print(f"{name:>12}: vs {oracle:<4} max rel dev {dev.max():.2e} ({states[worst]}), "
              f"contraction {verdict}, {dt:.2f}s")


if __name__ == "__main__":
    main()
