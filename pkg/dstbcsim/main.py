#!/usr/bin/env python3
"""
Cell-free DSTBC simulator - Main Application
"""

import sys
from typing import List, Optional

from .analyzer import ReportAnalyzer
from .cli import CLI, RunOptions
from .config import derive_constants
from .errors import SimulationError
from .metrics import AggregateReport
from .montecarlo import run_monte_carlo, run_sweep
from .writer import geometry_path, write_geometry, write_results


class SimulationProcessor:
    def __init__(self) -> None:
        self.cli = CLI()
        self.analyzer = ReportAnalyzer()

    def run(self, args: Optional[List[str]] = None) -> int:
        try:
            options = self.cli.parse_args(args)

            if options.list_presets:
                self.cli.print_preset_info()
                return 0

            if not self.cli.validate_options(options):
                return 1

            return self._simulate(options)

        except KeyboardInterrupt:
            print("\nOperation cancelled by user")
            return 130
        except SimulationError as e:
            print(f"✗ {e}")
            return 1
        except Exception as e:
            print(f"Unexpected error: {e}")
            return 1

    def _simulate(self, options: RunOptions) -> int:
        cfg = options.config
        const = derive_constants(cfg)
        verbose = not options.quiet

        if verbose:
            print(f"Simulating {cfg.n_setups} setup(s) x {cfg.n_blocks_per_setup} block(s): "
                  f"L={cfg.L}, K={cfg.K}, N_AP={cfg.N_AP}, N_UE={cfg.N_UE}, N_s={cfg.N_s}, "
                  f"L_k={cfg.L_k} ({cfg.design})")
            print(f"Modes: {', '.join(options.modes)}; precoders: {', '.join(options.precoders)}")

        geometry: Optional[list] = [] if options.dump_geometry else None
        report = self._run(options, verbose, geometry)

        output = write_results(report, options.output_path, options.output_format, cfg, const)
        print(f"✓ Results written to {output}")

        if geometry is not None:
            geometry_output = write_geometry(geometry, geometry_path(output))
            print(f"✓ Geometry written to {geometry_output}")

        if verbose:
            self.analyzer.print_summary(report)
        return 0

    def _run(self, options: RunOptions, verbose: bool,
             geometry: Optional[list]) -> AggregateReport:
        if options.sweep_key is not None:
            return run_sweep(options.config, options.sweep_key, options.sweep_values,
                             options.modes, options.precoders, options.workers, verbose, geometry)
        return run_monte_carlo(options.config, options.modes, options.precoders,
                               options.workers, verbose, geometry)


def main() -> None:
    """Main entry point"""
    processor = SimulationProcessor()
    exit_code = processor.run()
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
