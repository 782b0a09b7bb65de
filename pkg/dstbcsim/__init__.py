#!/usr/bin/env python3
"""
dstbcsim - downlink simulator for cell-free massive MIMO with differential
space-time block coding.

Compares coherent precoding with calibrated and uncalibrated multi-antenna
UEs against DSTBC transmission from each UE's serving AP cluster, under
ZISI and P-MMSE precoding.
"""

try:
    from importlib.metadata import version
    __version__ = version("dstbcsim")
except Exception:
    # Fallback for development when package isn't installed
    __version__ = "unknown"
__description__ = "Cell-free massive MIMO downlink simulator with DSTBC"

from .config import SystemConfig, DerivedConstants, SCENARIO_PRESETS, derive_constants, load_config
from .dstbc import SpaceTimeCodebook, build_codebook
from .link import LinkSimulator
from .metrics import AggregateReport, TrialMetrics
from .montecarlo import run_monte_carlo, run_sweep
from .analyzer import ReportAnalyzer
from .cli import CLI

from .main import SimulationProcessor

__all__ = [
    'SystemConfig',
    'DerivedConstants',
    'SCENARIO_PRESETS',
    'derive_constants',
    'load_config',
    'SpaceTimeCodebook',
    'build_codebook',
    'LinkSimulator',
    'AggregateReport',
    'TrialMetrics',
    'run_monte_carlo',
    'run_sweep',
    'ReportAnalyzer',
    'CLI',
    'SimulationProcessor',
]
