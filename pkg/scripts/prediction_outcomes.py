#!/usr/bin/env python3
"""Classify handover predictions on the hexagonal grid for a range of call-to-mobility factors."""
import argparse

from mcast_handover.analytic import MobilityParams
from mcast_handover.mobility import CellGrid, crofton_mean_chord, measure_residence_time, simulate_prediction_outcomes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--rho", type=float, nargs="+", default=[0.1, 0.5, 1.0, 2.0, 5.0])
    args = ap.parse_args()

    grid = CellGrid(1.0)
    residence = measure_residence_time(grid, 1.0, seed=args.seed)
    print(f"mean residence {residence:.4f} (mean chord {crofton_mean_chord(grid):.4f})")
    print(f"{'rho':>5} {'predictions':>11} {'correct':>8} {'wrong':>7} {'ended':>7} {'erroneous':>9}")
    for rho in args.rho:
        r = simulate_prediction_outcomes(MobilityParams.from_rho(rho), grid, 1.0, args.trials, args.seed, residence)
        print(
            f"{rho:5g} {r.predictions:11d} {r.correct_rate:8.2%} {r.wrong_cell_rate:7.2%} "
            f"{r.terminated_rate:7.2%} {r.erroneous_rate:9.2%}"
        )


if __name__ == "__main__":
    main()
