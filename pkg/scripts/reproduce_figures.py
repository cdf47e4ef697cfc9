#!/usr/bin/env python3
"""Regenerate every figure's data as CSV (plus manifests) into one directory.

    python scripts/reproduce_figures.py out/ [--quick] [--seed 0]

Runs each ``uplink-sg`` subcommand in-process; a non-zero exit from any of
them stops the run with that code.
"""
import argparse
import sys
from pathlib import Path

from uplink_sg import cli

FIGURES = {
    # coverage curves in both validation regimes, analytic vs true-PPP and vs hex grid
    "coverage_a4_e1_ppp.csv": ["coverage", "--lambda", "0.25", "--alpha", "4", "--eps", "1", "--no-noise",
                               "--mu-inv-dbm", "30", "--simulate", "--sim-mode", "true-ppp"],
    "coverage_a325_e075_ppp.csv": ["coverage", "--lambda", "0.25", "--alpha", "3.25", "--eps", "0.75",
                                   "--no-noise", "--mu-inv-dbm", "30", "--simulate", "--sim-mode", "true-ppp"],
    "coverage_a4_e1_hex.csv": ["coverage", "--lambda", "0.25", "--alpha", "4", "--eps", "1", "--no-noise",
                               "--mu-inv-dbm", "30", "--model", "uniform-disk", "--simulate"],
    "coverage_a325_e075_hex.csv": ["coverage", "--lambda", "0.25", "--alpha", "3.25", "--eps", "0.75",
                                   "--no-noise", "--mu-inv-dbm", "30", "--model", "uniform-disk", "--simulate"],
    "rate.csv": ["rate"],
    "opt_eps.csv": ["opt-eps"],
    "dl_ul.csv": ["dl-ul"],
    "txpower.csv": ["txpower"],
    "rz_joint.csv": ["rzstats"],
    "rz_joint_iid.csv": ["rzstats", "--iid"],
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="+", choices=sorted(FIGURES), help="subset of output files")
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name in args.only or FIGURES:
        argv_i = FIGURES[name] + ["--seed", str(args.seed), "--out", str(args.outdir / name)]
        if args.quick:
            argv_i.append("--quick")
        print(f"uplink-sg {' '.join(argv_i)}", file=sys.stderr, flush=True)
        code = cli.main(argv_i)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
