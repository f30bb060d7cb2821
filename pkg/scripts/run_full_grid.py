#!/usr/bin/env python3
"""Run the full regret-comparison grid and write CSVs under out/full_grid.

Pass extra --set overrides through, e.g. --set runs=5 for a fast pass.
"""

import sys
from pathlib import Path

from fifd.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    argv = [
        "--config", str(ROOT / "configs" / "full_grid.cfg"),
        "--out", str(ROOT / "out" / "full_grid"),
    ] + sys.argv[1:]
    sys.exit(main(argv))
