#!/usr/bin/env python3
"""Run the desk-scale prediction-error sweep and print the summary table.

Writes the CSV next to this repo under out/ by default; render it with the
plots package:  render --csv out/desk_sweep.csv --out out/desk_sweep.png
"""

import argparse
import time
from pathlib import Path

from icecover import bench


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/desk_sweep.csv")
    parser.add_argument("--instances", type=int, default=20)
    parser.add_argument("--elements", type=int, default=200)
    parser.add_argument("--sets", type=int, default=40)
    parser.add_argument("--set-size", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    config = bench.ExperimentConfig(
        dataset="random-spec",
        n_instances=args.instances,
        n_elements=args.elements,
        n_sets=args.sets,
        set_size=args.set_size,
        base_seed=args.seed,
    )
    started = time.monotonic()
    rows = bench.run_experiment(config, out_path=args.out)
    elapsed = time.monotonic() - started
    print(f"{len(rows)} rows -> {args.out}  ({elapsed:.0f}s)")
    for s in bench.summarize(rows):
        print(f"{s.algorithm:11s} @{s.bucket_pct:3d}%: {s.mean:.3f} ({s.std:.3f}) n={s.count}")


if __name__ == "__main__":
    main()
