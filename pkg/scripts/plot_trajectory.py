#!/usr/bin/env python3
"""Plot the adaptive threshold and model certainty from a trajectory CSV.

Usage: python scripts/plot_trajectory.py RUN_DIR/trajectory_s0_f0.csv [-o out.png]
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from curriq.harness import read_trajectory_csv


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("trajectory", type=str)
    parser.add_argument("-o", "--out", type=str, default=None)
    args = parser.parse_args()

    rows = read_trajectory_csv(args.trajectory)
    steps = range(len(rows))
    theta = [r.theta for r in rows]
    t_ada = [r.t_ada if r.t_ada is not None else float("nan") for r in rows]

    fig, (top, bottom) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    top.plot(steps, theta, lw=0.8, color="tab:green", label="model certainty")
    top.plot(steps, t_ada, lw=0.8, color="tab:orange", label="adaptive threshold")
    top.set_ylabel("value")
    top.set_ylim(0.0, 1.05)
    top.legend(loc="lower right")
    bottom.plot(steps, [r.discard_count for r in rows], lw=0.6, color="tab:red")
    bottom.set_ylabel("discards per batch")
    bottom.set_xlabel("batch")
    fig.tight_layout()

    out = args.out or str(Path(args.trajectory).with_suffix(".png"))
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
