#!/usr/bin/env python3
"""Run the desk-scale lifelong experiment into runs/lifelong."""
import sys
from pathlib import Path

from tamp2d.cli import main

if __name__ == "__main__":
    config = Path(__file__).resolve().parent.parent / "configs" / "lifelong_desk.yaml"
    sys.exit(main(["run", "--config", str(config), *sys.argv[1:]]))
