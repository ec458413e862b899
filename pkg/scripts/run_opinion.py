#!/usr/bin/env python3
"""Opinion dynamics at d = 50 (quick) or d in {50,100,200,400} (--full).

Writes opinion.csv and summary.json into --out-dir.
"""
import argparse

from kanlmm import experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/opinion")
    ap.add_argument("--full", action="store_true", help="full reference scale (very slow)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary = experiments.run("opinion", args.out_dir,
                              quick=not args.full, seed=args.seed)
    for cell in summary["cells"]:
        print(f"d = {cell['d']}: L-inf error {cell['linf_error']:.3e}, "
              f"components {cell['components_start']} -> {cell['components_end']}")


if __name__ == "__main__":
    main()
