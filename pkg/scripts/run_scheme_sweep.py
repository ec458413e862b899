#!/usr/bin/env python3
"""Field-recovery error per scheme family and step count (linear system).

Writes scheme_sweep.csv and summary.json into --out-dir.  Quick scale by
default; pass --full for the full reference protocol (slow).
"""
import argparse

from kanlmm import experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/scheme_sweep")
    ap.add_argument("--full", action="store_true", help="full reference scale (slow)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary = experiments.run("scheme-sweep", args.out_dir, quick=not args.full, seed=args.seed)
    for cell in summary["cells"]:
        print(f"{cell['family']:>3} M={cell['steps']}: "
              f"seminorm {cell['seminorm_error']:.3e}, best loss {cell['best_loss']:.3e}")


if __name__ == "__main__":
    main()
