#!/usr/bin/env python3
"""Sweep the router distance and print completion probability and mean loss per scheme."""
import argparse

from mcast_handover.analytic import Scheme
from mcast_handover.engine import TimerSet, TrialConfig, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--stop", type=float, default=40.0)
    ap.add_argument("--step", type=float, default=5.0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    n = int(round(args.stop / args.step))
    distances = [i * args.step for i in range(n + 1)]
    rows = sweep(
        TrialConfig(timers=TimerSet()),
        distances,
        args.trials,
        args.seed,
        schemes=(Scheme.BT, Scheme.REACTIVE, Scheme.PREDICTIVE),
        workers=args.workers,
    )
    print(f"{'dist':>6} {'scheme':>11} {'loss pkts':>10} {'window ms':>10} {'delay ms':>9} {'P(done)':>8}")
    for r in rows:
        done = "" if r.completion_probability is None else f"{r.completion_probability:.4f}"
        print(
            f"{r.distance:6g} {r.scheme.value:>11} {r.mean_loss_packets:10.3f} "
            f"{r.mean_loss_window:10.2f} {r.mean_added_delay:9.2f} {done:>8}"
        )


if __name__ == "__main__":
    main()
