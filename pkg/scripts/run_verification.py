#!/usr/bin/env python3
"""Run the numerical bound-verification sweep and write a JSON report.

Draws random tabular game instances, evaluates every analytic check on each
(policy-difference identity, return lower bound, suggestion-gap bound,
surrogate lower bound, KL product subadditivity), and summarizes worst
margins. Exits nonzero if any check fails.
"""

import argparse
import sys

from ssmarl.verification import format_report, run_verification_sweep, write_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=1000,
                        help="number of random instances (default 1000)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="verification_report.json",
                        help="where to write the JSON report")
    args = parser.parse_args(argv)

    report = run_verification_sweep(n_instances=args.instances, seed=args.seed)
    write_report(report, args.out)
    print(format_report(report))
    print(f"report written to {args.out}")
    return 0 if report["all_passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
