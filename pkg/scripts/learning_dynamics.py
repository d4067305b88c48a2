#!/usr/bin/env python3
"""Paired-seed comparison of graded-critic vs exact-match reward training.

Builds the 200-position teacher fixture, runs both presets from the same
anti-aligned start for each seed, and prints steps-to-50%-greedy-accuracy
plus final accuracy per run.

Usage: python scripts/learning_dynamics.py [--seeds 10] [--steps 2000]
       [--positions 200] [--out metrics.json]
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from chessrl.dynamics import anti_teacher_init, build_fixture, dynamics_config, run_pair


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--positions", type=int, default=200)
    parser.add_argument("--fixture-seed", type=int, default=7)
    parser.add_argument("--target", type=float, default=0.5)
    parser.add_argument("--out", default=None, help="Write per-seed results JSON here.")
    args = parser.parse_args()

    started = time.monotonic()
    print(f"building {args.positions}-position fixture ...", file=sys.stderr)
    fixture = build_fixture(count=args.positions, seed=args.fixture_seed)
    init = anti_teacher_init()

    rows = []
    dense_wins = 0
    print(f"{'seed':>4} {'dense_steps':>12} {'sparse_steps':>13} "
          f"{'dense_final':>12} {'sparse_final':>13}", file=sys.stderr)
    for seed in range(args.seeds):
        run = run_pair(fixture, seed, dynamics_config(seed, steps=args.steps),
                       target=args.target, initial_theta=init)
        dense_wins += run.dense_faster
        rows.append({
            "seed": seed,
            "dense_steps_to_target": run.dense_steps,
            "sparse_steps_to_target": run.sparse_steps,
            "dense_final_accuracy": run.dense_final,
            "sparse_final_accuracy": run.sparse_final,
            "dense_faster": run.dense_faster,
        })
        print(f"{seed:>4} {str(run.dense_steps):>12} {str(run.sparse_steps):>13} "
              f"{run.dense_final:>12.3f} {run.sparse_final:>13.3f}", file=sys.stderr)

    summary = {
        "seeds": args.seeds,
        "target_accuracy": args.target,
        "dense_faster_count": dense_wins,
        "runs": rows,
        "wall_seconds": round(time.monotonic() - started, 1),
    }
    print(json.dumps(summary if args.out is None else
                     {k: summary[k] for k in ("seeds", "dense_faster_count", "wall_seconds")},
                     indent=2, sort_keys=True))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    print(f"graded critic reached {args.target:.0%} greedy accuracy first in "
          f"{dense_wins}/{args.seeds} paired seeds", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
