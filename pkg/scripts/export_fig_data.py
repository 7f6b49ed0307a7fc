#!/usr/bin/env python3
"""Export density CSVs for the original and attacked 1-D distributions.

Produces one CSV per panel (original / no penalty / mass / norm) plus an atom
sidecar; any external plotter can reproduce the four-panel figure from them.
"""

import argparse

import advgame as ag
from advgame.theorems import fig1_export


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/fig1")
    parser.add_argument("--lam", type=float, default=0.3)
    parser.add_argument("--epsilon", type=float, default=0.5)
    parser.add_argument("--resolution", type=int, default=2001)
    args = parser.parse_args()

    spec = ag.two_gaussians_1d()
    cfg = ag.GameConfig("mass", args.lam, args.epsilon)
    for path in fig1_export(spec, cfg, args.out, resolution=args.resolution):
        print(path)


if __name__ == "__main__":
    main()
