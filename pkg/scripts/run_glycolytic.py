#!/usr/bin/env python3
"""Glycolytic oscillator: train on [0, 10] and predict past the data.

Writes reference.csv, learned.csv, model.json and summary.json into
--out-dir.
"""
import argparse

from kanlmm import experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/glycolytic")
    ap.add_argument("--full", action="store_true", help="full reference scale (slow)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    summary = experiments.run("glycolytic", args.out_dir,
                              quick=not args.full, seed=args.seed)
    print(f"seminorm error = {summary['seminorm_error']:.3e}")
    print(f"L-inf trajectory error: {summary['linf_error_train_interval']:.3e} "
          f"on the training interval, {summary['linf_error_full_interval']:.3e} "
          "including extrapolation")


if __name__ == "__main__":
    main()
