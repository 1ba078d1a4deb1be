#!/usr/bin/env python3
"""Replay the adversarial chain: naive link buying pays k, charging pays O(log k)."""

import argparse
from fractions import Fraction

from icecover import wpap


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", type=int, default=16)
    args = parser.parse_args()

    inst, arrivals = wpap.gen_adversarial(args.k)
    opt = wpap.exact_cover_subset(inst, set(arrivals)).cost
    naive, _ = wpap.cheapest_lowest_index_run(inst, arrivals)
    lam = wpap.laminarize(inst, opt)
    state = wpap.WpapDetState(lam)
    charged = Fraction(0)
    for e in arrivals:
        state, _, inc = wpap.det_online_step(state, lam, e)
        charged += inc
    print(f"k={args.k}  opt={opt}")
    print(f"cheapest-lowest-index: cost {naive}  ratio {float(naive / opt):g}")
    print(f"interval charging:     cost {charged}  ratio {float(charged / opt):g}")


if __name__ == "__main__":
    main()
