"""Sweep (delta, epsilon) for the treasury game and report the round the
treasury runs dry, plus the long-run balance of the rest of the system."""

import argparse
import csv
import sys

import numpy as np

from tegsim.errors import TreasuryDepleted
from tegsim.scenarios import UbiSpec, ubi_run
from tegsim.scenarios.ubi import ubi_closed_form


def depletion_round(spec: UbiSpec, horizon: int) -> int | None:
    try:
        ubi_run(spec, horizon)
    except TreasuryDepleted as exc:
        return exc.round
    return None


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega", type=float, default=100.0)
    ap.add_argument("--horizon", type=int, default=500)
    ap.add_argument("--steps", type=int, default=6)
    args = ap.parse_args()

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["delta", "epsilon", "depleted_at", "rest_at_horizon"])
    for delta in np.linspace(0.02, 0.3, args.steps):
        for eps in np.linspace(0.0, 1.0, args.steps):
            spec = UbiSpec(args.omega, float(delta), float(eps))
            dead = depletion_round(spec, args.horizon)
            rest = "" if dead is not None else f"{ubi_closed_form(args.horizon, spec)[1]:.6g}"
            out.writerow([f"{delta:.4g}", f"{eps:.4g}", "" if dead is None else dead, rest])


if __name__ == "__main__":
    main()
