#!/usr/bin/env python3
"""
Command line interface for the cell-free DSTBC simulator
"""

import sys
import argparse
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import (DEFAULT_OUTPUT_FORMAT, MODES, PRECODERS, DETECTORS, SCENARIO_PRESETS,
                     SUPPORTED_OUTPUT_FORMATS, SystemConfig, build_config, coerce_value,
                     config_keys, load_config)
from .errors import ConfigError

DEFAULT_OUTPUT_STEM = 'dstbcsim_results'


@dataclass
class RunOptions:
    """Everything one invocation needs besides the scenario itself"""
    config: SystemConfig
    modes: List[str]
    precoders: List[str]
    output_path: str
    output_format: str = DEFAULT_OUTPUT_FORMAT
    sweep_key: Optional[str] = None
    sweep_values: List[Any] = field(default_factory=list)
    dump_geometry: bool = False
    workers: int = 1
    quiet: bool = False
    list_presets: bool = False


class CLI:
    """Command line interface handler"""

    def __init__(self) -> None:
        self.parser = self._create_parser()

    def _create_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            description="Symbol-level downlink simulator for cell-free massive MIMO "
                        "with differential space-time block coding",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog=self._get_examples_text()
        )

        parser.add_argument('--config', metavar='PATH', help='Scenario file with key = value lines')
        parser.add_argument('--preset', choices=list(SCENARIO_PRESETS),
                            help='Named scenario applied before the config file')
        parser.add_argument('--list-presets', action='store_true',
                            help='Show the available scenario presets and exit')

        parser.add_argument('--seed', type=int, help='Master seed for every random draw')
        parser.add_argument('--setups', type=int, help='Number of Monte Carlo setups')
        parser.add_argument('--blocks', type=int, help='Coherence blocks per setup')

        parser.add_argument('--mode', choices=list(MODES) + ['all'],
                            help='Transmission mode (default: from config, dstbc)')
        parser.add_argument('--precoder', choices=list(PRECODERS) + ['all'],
                            help='Precoder (default: from config, zisi)')
        parser.add_argument('--detector', choices=list(DETECTORS),
                            help='DSTBC detector (default: decoupled)')

        parser.add_argument('-o', '--output', help='Results file (default: dstbcsim_results.<format>)')
        parser.add_argument('--format', choices=SUPPORTED_OUTPUT_FORMATS,
                            help='Output format (default: from --output suffix, else csv)')

        parser.add_argument('--sweep', metavar='KEY=V1,V2,...',
                            help='Repeat the run for each value of one config key')
        parser.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                            dest='overrides', help='Override any config key (repeatable)')

        parser.add_argument('--dump-geometry', action='store_true',
                            help='Also write AP/UE coordinates to <output stem>_geometry.csv')
        parser.add_argument('--workers', type=int, default=1,
                            help='Worker processes running setups in parallel (default: 1)')
        parser.add_argument('--noiseless', action='store_true', help='Remove receiver noise')
        parser.add_argument('--perfect-csi', action='store_true',
                            help='Use the true UL channels instead of MMSE estimates')
        parser.add_argument('-q', '--quiet', action='store_true', help='Suppress progress lines')

        return parser

    def _get_examples_text(self) -> str:
        return """
Examples:
  %(prog)s --preset smoke                          # Quick run on a tiny network
  %(prog)s --preset desk --mode all --precoder all # Compare every mode and precoder
  %(prog)s --config scenario.txt -o run.json       # Scenario file, JSON report
  %(prog)s --preset cluster4 --detector full       # 4-AP clusters, exhaustive detector
  %(prog)s --sweep K=10,20,30 --precoder all       # Network-load sweep
  %(prog)s --sweep N_UE=2,4                        # UE antenna sweep (N_s follows N_UE)
  %(prog)s --set shadow_sigma_dB=6 --workers 4     # Override a key, run setups in parallel
  %(prog)s --list-presets                          # Show scenario presets

Modes:
  pcal:  coherent precoding, perfectly calibrated UE arrays
  uncal: coherent precoding, unknown UE RF-branch phase offsets
  dstbc: differential space-time coding over the serving cluster
"""

    @staticmethod
    def _split_assignment(text: str, option: str) -> List[str]:
        if '=' not in text:
            raise ConfigError(f"{option} expects KEY=VALUE, got {text!r}")
        key, value = (part.strip() for part in text.split('=', 1))
        if key not in config_keys():
            raise ConfigError("unknown configuration key", key)
        return [key, value]

    def _overrides(self, parsed_args: argparse.Namespace) -> Dict[str, Any]:
        overrides: Dict[str, Any] = {}
        for assignment in parsed_args.overrides:
            key, value = self._split_assignment(assignment, '--set')
            overrides[key] = value

        flags = {
            'seed': parsed_args.seed,
            'n_setups': parsed_args.setups,
            'n_blocks_per_setup': parsed_args.blocks,
            'detector': parsed_args.detector,
        }
        overrides.update({key: value for key, value in flags.items() if value is not None})
        if parsed_args.mode and parsed_args.mode != 'all':
            overrides['mode'] = parsed_args.mode
        if parsed_args.precoder and parsed_args.precoder != 'all':
            overrides['precoder'] = parsed_args.precoder
        if parsed_args.noiseless:
            overrides['noiseless'] = True
        if parsed_args.perfect_csi:
            overrides['perfect_csi'] = True
        return overrides

    def parse_args(self, args: Optional[List[str]] = None) -> RunOptions:
        """Parse command line arguments into run options and a validated config"""
        if args is None:
            args = sys.argv[1:]

        parsed_args = self.parser.parse_args(args)
        overrides = self._overrides(parsed_args)

        if parsed_args.config:
            config = load_config(parsed_args.config, overrides=overrides, preset=parsed_args.preset)
        else:
            config = build_config(preset=parsed_args.preset, overrides=overrides)

        modes = list(MODES) if parsed_args.mode == 'all' else [config.mode]
        precoders = list(PRECODERS) if parsed_args.precoder == 'all' else [config.precoder]

        output_format = parsed_args.format
        if output_format is None and parsed_args.output:
            suffix = Path(parsed_args.output).suffix.lower().lstrip('.')
            if suffix in SUPPORTED_OUTPUT_FORMATS:
                output_format = suffix
        output_format = output_format or DEFAULT_OUTPUT_FORMAT
        output_path = parsed_args.output or f"{DEFAULT_OUTPUT_STEM}.{output_format}"

        sweep_key = None
        sweep_values: List[Any] = []
        if parsed_args.sweep:
            sweep_key, raw_values = self._split_assignment(parsed_args.sweep, '--sweep')
            sweep_values = [coerce_value(sweep_key, value)
                            for value in raw_values.split(',') if value.strip()]

        return RunOptions(
            config=config,
            modes=modes,
            precoders=precoders,
            output_path=output_path,
            output_format=output_format,
            sweep_key=sweep_key,
            sweep_values=sweep_values,
            dump_geometry=parsed_args.dump_geometry,
            workers=parsed_args.workers,
            quiet=parsed_args.quiet,
            list_presets=parsed_args.list_presets,
        )

    def print_help(self):
        self.parser.print_help()

    def print_preset_info(self):
        """Print the scenario presets and their overrides"""
        print("Scenario Presets:")
        print("=" * 50)

        for name, preset in SCENARIO_PRESETS.items():
            print(f"{name.upper()}:")
            print(f"  Description: {preset.description}")
            if preset.overrides:
                changes = ', '.join(f"{key}={value}" for key, value in preset.overrides.items())
                print(f"  Overrides: {changes}")
            else:
                print("  Overrides: none (defaults)")
            print()

    def validate_options(self, options: RunOptions) -> bool:
        """Checks that cannot be expressed in the config itself"""
        if options.workers < 1:
            print(f"Error: --workers must be at least 1: {options.workers}")
            return False

        output_dir = Path(options.output_path).parent
        if not output_dir.exists():
            print(f"Error: Output directory does not exist: {output_dir}")
            return False

        if options.sweep_key is not None:
            if not options.sweep_values:
                print(f"Error: --sweep {options.sweep_key} needs at least one value")
                return False
            if options.sweep_key in ('seed', 'mode', 'precoder'):
                print(f"Error: Cannot sweep {options.sweep_key}; use --mode/--precoder all instead")
                print("Valid options: any numeric key such as K, L, N_UE, L_k")
                return False

        return True
