#!/usr/bin/env python3
"""Both ablation sweeps on the standard synthetic benchmark: queue length
{0 (baseline), 16, 32, 64} and the threshold multiplier {0, 1, 2, theta}.

Usage: python scripts/run_ablation.py [--seeds N] [--out DIR]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dataclasses import replace

from curriq.harness import run_ablation, standard_benchmark_config


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--out", type=str, default=None)
    args = parser.parse_args()

    base = standard_benchmark_config("acl", seeds=tuple(range(args.seeds)))
    for axis in ("queue_length", "alpha"):
        cfg = base
        if args.out is not None:
            cfg = replace(base, output_dir=str(Path(args.out) / axis))
        result = run_ablation(cfg, axis)
        print(result.table())
        print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
