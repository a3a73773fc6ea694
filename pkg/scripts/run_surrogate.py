#!/usr/bin/env python3
"""Generate the surrogate dataset and run every CLI stage on it.

    python3 scripts/run_surrogate.py --out runs/surrogate --seed 0
"""
import argparse
import json
import sys
from pathlib import Path

from voxfeat import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/surrogate")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--paper-mode", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    common = ["--out", str(out), "--seed", str(args.seed)]
    steps = [
        ["synth", *common],
        ["extract", *common, "--manifest", str(out / "manifest.csv")] + (["--jobs", str(args.jobs)] if args.jobs else []),
        ["correlate", *common],
    ]
    steps += [["boxplot", "--out", str(out / f"box_{g}"), "--table", str(out / "features.csv"), "--group-by", g] for g in ("pressure", "gc", "symmetry")]
    for target in ("pressure", "gc", "symmetry"):
        steps.append(
            ["classify", "--out", str(out / target), "--table", str(out / "features.csv"), "--seed", str(args.seed), "--target", target]
            + (["--paper-mode"] if args.paper_mode else [])
        )
    for argv in steps:
        code = cli.main(argv)
        if code:
            print(f"step {argv[0]} failed with exit code {code}", file=sys.stderr)
            return code
    print(f"{'target':<10} {'training':>9} {'cv mean':>8}")
    for target in ("pressure", "gc", "symmetry"):
        rep = json.loads((out / target / "cv_report.json").read_text())
        print(f"{target:<10} {rep['training_score']:>9.3f} {rep['cross_validation']['mean_accuracy']:>8.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
