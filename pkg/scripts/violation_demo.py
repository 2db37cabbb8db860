"""Shift one q_n0 of the tent IFS and show what breaks: continuity, interpolation, the integral."""

import argparse
import json

from fifkit.fif1d import FixedPointConfig, endpoint_violation_experiment, integrate_closed_form
from fifkit.ifs1d import DataSet1D, build_ifs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.3)
    ap.add_argument("--cell", type=int, default=1)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.0, 0.01, 0.05, 0.1, 0.2])
    args = ap.parse_args()

    ifs = build_ifs(DataSet1D((0.0, 0.5, 1.0), (0.0, 1.0, 0.0)), (args.alpha, args.alpha))
    base = integrate_closed_form(ifs)
    print(f"unperturbed integral {base!r}")
    for d in args.deltas:
        rep = endpoint_violation_experiment(ifs, args.cell, d, FixedPointConfig())
        print(json.dumps({"delta": d, **rep.as_dict()}, sort_keys=True))


if __name__ == "__main__":
    main()
