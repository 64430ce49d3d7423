#!/usr/bin/env python3
"""Full-size convergence comparison: 128x128 channel, 8-PSK, SNR 20 dB,
100 trials under a 0.1 s per-run budget.  Slow; run on a free machine."""

import sys

from varsmooth.cli import main

ARGS = [
    "convergence",
    "--out", "out/paper_conv",
    "--trials", "100",
    "--seed", "1000",
    "--override", "experiment.u=128",
    "--override", "experiment.b=128",
    "--override", "experiment.m=8",
    "--override", "experiment.snr_list=20",
    "--override", "experiment.methods=pvs,sub_lipschitz,sub_heuristic",
    "--override", "stop.time_budget_s=0.1",
    "--override", "stop.x_change_tol=0",
    "--override", "stop.max_iters=1000000",
    "--override", "pvs.lambda_r=0.1",
    "--override", "pvs.lambda_theta=0.1",
    "--override", "pvs.r_lower=0.1",
]

if __name__ == "__main__":
    sys.exit(main(ARGS))
