#!/usr/bin/env python3
"""Compare replay against full retraining on a lifelong stream."""
import sys
from pathlib import Path

from tamp2d.cli import main

if __name__ == "__main__":
    config = Path(__file__).resolve().parent.parent / "configs" / "lifelong_desk.yaml"
    sys.exit(
        main(
            [
                "run",
                "--config",
                str(config),
                "--mode",
                "replay_vs_retrain",
                "--methods",
                "per_domain_mixture",
                "--domains",
                "Books,Cups",
                "--tasks-per-domain",
                "50",
                *sys.argv[1:],
            ]
        )
    )
