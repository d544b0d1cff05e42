#!/usr/bin/env python3
"""Compare simulated handovers per call with the closed-form expectation."""
import argparse
import math

from mcast_handover.analytic import MobilityParams, expected_handovers
from mcast_handover.mobility import count_handovers


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    print(f"{'rho':>5} {'k':>3} {'simulated':>10} {'closed form':>12} {'q/(1-q)':>9}")
    for rho in (0.5, 1.0, 2.0):
        for k in (1, 4, 9):
            p = MobilityParams.from_rho(rho, k=k)
            got = count_handovers(p, args.trials, args.seed)
            geometric = 1 / (math.sqrt(k) * rho)
            print(f"{rho:5g} {k:3d} {got:10.4f} {expected_handovers(p):12.4f} {geometric:9.4f}")


if __name__ == "__main__":
    main()
