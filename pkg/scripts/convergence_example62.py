"""Observed convergence order of the solver on the exactly solvable 2x2 system."""
import argparse

import numpy as np

from hybridfrac.models import get_model
from hybridfrac.oracles import exact_solutions
from hybridfrac.solver import SolveConfig, convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, nargs="+", default=[10, 50, 100, 200, 400, 600, 800, 1000])
    ap.add_argument("--mode", choices=["marching", "global"], default="marching")
    args = ap.parse_args()
    system = get_model("example-6.2", orders=(1.0, 1.0))
    hs = [1.0 / m for m in sorted(args.m)]
    study = convergence_study(system, exact_solutions("example-6.2"), hs, SolveConfig(h=hs[0], mode=args.mode))
    print(f"{'h':>12} {'|e1|inf':>14} {'|e2|inf':>14}")
    for h, e in study.rows():
        print(f"{h:12.6g} {e[0]:14.6e} {e[1]:14.6e}")
    pair = np.log(study.errors[:-1] / study.errors[1:]) / np.log(study.h[:-1] / study.h[1:])[:, None]
    print("pairwise orders:")
    for (h1, h2), p in zip(zip(study.h[:-1], study.h[1:]), pair):
        print(f"  {h1:.5g} -> {h2:.5g}: {p[0]:.4f} {p[1]:.4f}")
    print(f"mean order per state: {np.round(study.orders, 4).tolist()}")


if __name__ == "__main__":
    main()
