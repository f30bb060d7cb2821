#!/usr/bin/env python3
"""Produce the rank-trajectory traces for five retention sizes."""

import sys
from pathlib import Path

from fifd.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    argv = [
        "--config", str(ROOT / "configs" / "rank_demo.cfg"),
        "--out", str(ROOT / "out" / "rank_demo"),
    ] + sys.argv[1:]
    sys.exit(main(argv))
