#!/usr/bin/env python3
"""Small cost-vs-time comparison; writes CSVs + SVG under out/desk_conv."""

import sys
from pathlib import Path

from varsmooth.cli import main

if __name__ == "__main__":
    cfg = Path(__file__).resolve().parent.parent / "configs" / "desk_convergence.cfg"
    sys.exit(main(["convergence", "--config", str(cfg), "--out", "out/desk_conv"]))
