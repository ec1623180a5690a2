#!/usr/bin/env python3
"""Full-scale comparison on user-supplied price CSVs (e.g. data/google.csv).

Runs all three bootstrap strategies at the reference settings (train 800,
lookback 5, batch 15, epochs 19, dropout 0.2, 1000 replicates, 95% band)
and prints the per-method comparing factors and selected block lengths.
Expect minutes per dataset; use --jobs and --reps to trade fidelity for time.
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("inputs", nargs="+", help="price CSVs with a Close column")
    ap.add_argument("--column", default="Close")
    ap.add_argument("--train-len", type=int, default=800)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--hidden", type=int, default=32)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--output-dir", default="benchmark_out")
    args = ap.parse_args()

    for path in args.inputs:
        name = Path(path).stem
        out = Path(args.output_dir) / name
        out.mkdir(parents=True, exist_ok=True)
        cmd = [sys.executable, "-m", "bootband", "compare",
               "--input", path, "--column", args.column,
               "--train-len", str(args.train_len),
               "--reps", str(args.reps),
               "--hidden", str(args.hidden),
               "--seed", str(args.seed),
               "--output-dir", str(out)]
        if args.jobs:
            cmd += ["--jobs", str(args.jobs)]
        print(f"== {name}: running 3 methods x {args.reps} replicates ...")
        subprocess.run(cmd, check=True)
        report = json.loads((out / "report.json").read_text())
        for row in report["ranking"]:
            print(f"  {row['method']}: comparing_factor={row['comparing_factor']:.4f} "
                  f"l_opt={row['l_opt']} coverage={row['coverage']:.3f}")


if __name__ == "__main__":
    main()
