#!/usr/bin/env python3
"""Aggregate persisted trial records into regret curves with bootstrap
bands and export CSV/SVG via the command-line front end."""

import argparse
import sys

from nsbandits import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("records", nargs="+", help="record files or directories")
    ap.add_argument("--out", default="results/plots")
    ap.add_argument("--resamples", type=int, default=1000)
    args = ap.parse_args()
    return cli.main(["plot", *args.records, "--out", args.out,
                     "--resamples", str(args.resamples)])


if __name__ == "__main__":
    sys.exit(main())
