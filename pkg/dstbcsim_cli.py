#!/usr/bin/env python3
"""
dstbcsim CLI Entry Point

Runs the simulator directly from a source checkout; the installed package
exposes the same entry point as the `dstbcsim` console script.
"""

import sys
from dstbcsim.main import SimulationProcessor


def main():
    """Main entry point for the CLI"""
    processor = SimulationProcessor()
    exit_code = processor.run()
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
