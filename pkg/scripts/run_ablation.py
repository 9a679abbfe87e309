#!/usr/bin/env python3
"""Run the mixture-strategy ablation at the smallest training size."""
import sys
from pathlib import Path

from tamp2d.cli import main

if __name__ == "__main__":
    config = Path(__file__).resolve().parent.parent / "configs" / "offline_desk.yaml"
    sys.exit(
        main(
            [
                "run",
                "--config",
                str(config),
                "--mode",
                "ablation",
                "--n-train",
                "10",
                *sys.argv[1:],
            ]
        )
    )
