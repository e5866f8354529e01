#!/usr/bin/env python3
"""Plain cross-entropy vs the adaptive curriculum on the standard synthetic
benchmark (10 seeds x 5 folds each), rendered as one comparison table.

Usage: python scripts/run_benchmark.py [--seeds N] [--out DIR]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from curriq.harness import run_cross_validation, standard_benchmark_config
from curriq.metrics import render_comparison_table


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, default=10, help="number of run seeds")
    parser.add_argument("--out", type=str, default=None, help="artifact directory")
    args = parser.parse_args()

    seeds = tuple(range(args.seeds))
    entries = []
    for strategy in ("cross_entropy", "acl"):
        out_dir = None if args.out is None else str(Path(args.out) / strategy)
        config = standard_benchmark_config(strategy, seeds=seeds, output_dir=out_dir)
        t0 = time.monotonic()
        artifacts = run_cross_validation(config)
        print(f"{strategy}: {len(artifacts.outcomes)} folds in "
              f"{time.monotonic() - t0:.0f}s", file=sys.stderr)
        entries.append((strategy, artifacts.report))

    print(render_comparison_table(entries))
    ce_auc = entries[0][1].aggregate("auc")[0]
    acl_auc = entries[1][1].aggregate("auc")[0]
    print(f"\nAUC gain: {100 * (acl_auc - ce_auc):+.2f} points")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
