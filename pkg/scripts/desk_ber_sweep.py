#!/usr/bin/env python3
"""Small BER-vs-SNR sweep; writes CSV + SVG under out/desk_ber."""

import sys
from pathlib import Path

from varsmooth.cli import main

if __name__ == "__main__":
    cfg = Path(__file__).resolve().parent.parent / "configs" / "desk_ber.cfg"
    sys.exit(main(["ber-sweep", "--config", str(cfg), "--out", "out/desk_ber"]))
