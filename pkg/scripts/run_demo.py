"""Run every fringe case and the HOM dip scans, then print the comparison table.

Usage: python3 scripts/run_demo.py [--out-dir DIR] [--seed S] [--workers N]
"""

import sys

from mzphoton.cli import main

if __name__ == "__main__":
    sys.exit(main(["demo", *sys.argv[1:]]))
