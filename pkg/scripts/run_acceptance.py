#!/usr/bin/env python3
"""Run the acceptance checks and print one PASS/FAIL line per criterion.

Equivalent to ``uplink-sg validate``; kept as a script so it can be pointed
at a report file without installing the console entry point.
"""
import sys

from uplink_sg import cli

if __name__ == "__main__":
    sys.exit(cli.main(["validate", *sys.argv[1:]]))
