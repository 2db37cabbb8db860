"""Seam jumps of the surface operator under each policy, on a bumped and on a collinear grid."""

import argparse

import numpy as np

from fifkit.errors import PolicyError
from fifkit.fif1d import FixedPointConfig
from fifkit.fis2d import GridData2D, SeamPolicy, build_ifs2d, fixed_point_2d, seam_jump_report


def grids():
    knots = (0.0, 0.5, 1.0)
    z = np.outer(knots, knots)
    bumped = z.copy()
    bumped[1, 0] += 0.1
    inner = z.copy()
    inner[1, 1] = 0.7
    return {"bumped": GridData2D(knots, knots, bumped), "collinear": GridData2D(knots, knots, inner)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.3)
    ap.add_argument("--resolution", type=int, default=128)
    args = ap.parse_args()
    cfg = FixedPointConfig(resolution=args.resolution)
    for name, grid in grids().items():
        ifs = build_ifs2d(grid, args.alpha)
        for policy in SeamPolicy:
            try:
                f = fixed_point_2d(ifs, policy, cfg)
            except PolicyError as exc:
                print(f"{name:9s} {policy.value:9s} refused: {exc}")
                continue
            jumps = seam_jump_report(f, ifs)
            print(f"{name:9s} {policy.value:9s} " + "  ".join(f"{k}: {v:.3g}" for k, v in jumps.items()))


if __name__ == "__main__":
    main()
