#!/usr/bin/env python3
"""Train the visualization samplers and dump the four sample-cloud panels."""
import sys

from tamp2d.cli import main

if __name__ == "__main__":
    kind = sys.argv[1] if len(sys.argv) > 1 else "pushblock"
    sys.exit(main(["viz", "--kind", kind, *sys.argv[2:]]))
