#!/usr/bin/env python3
"""
Monte Carlo driver: setups, coherence blocks and per-UE BER/SE aggregation.

Every random draw comes from a substream keyed by (seed, setup, purpose,
index), so any setup can be re-run on its own and modes compared in one
run see the same fading, pilots, offsets, data and noise.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import UEOffsets, draw_small_scale, draw_ue_offsets, realize_channels
from .config import (MODES, POWER_ALLOCATION, PRECODERS, DerivedConstants, SystemConfig,
                     derive_constants)
from .dstbc import SpaceTimeCodebook, build_codebook, correlation_multiplications
from .errors import ConfigError, PlacementError
from .link import LinkSimulator
from .metrics import AggregateReport, TrialMetrics, se_from_ber
from .precoding import ap_radiated_power, fro_norms_per_ue, scale_precoders, unit_precoders
from .topology import NetworkRealization, build_network, geometry_rows

# Substream purposes
NETWORK, OFFSETS, FADING, PILOTS, DATA = range(5)

# Placement attempts beyond the first before a setup is abandoned
PLACEMENT_RETRIES = 3

# Channel variant seen by each mode
CHANNEL_VARIANT = {
    'pcal': 'calibrated',
    'uncal': 'offset',
    'dstbc': 'offset',
}


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (setup, purpose, index) key"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass
class _Tally:
    """Running per-UE counters of one (mode, precoder) pair within a setup"""
    bit_errors: np.ndarray
    bits: np.ndarray
    regularized: np.ndarray
    evaluations: np.ndarray
    max_power_ratio: float = 0.0

    @classmethod
    def zeros(cls, K: int) -> '_Tally':
        return cls(*(np.zeros(K, dtype=np.int64) for _ in range(4)))


@dataclass
class SetupResult:
    """Rows of one setup plus its geometry and bookkeeping"""
    setup_id: int
    report: AggregateReport
    geometry: List[dict] = field(default_factory=list)
    retries: int = 0
    elapsed_s: float = 0.0


def draw_network(cfg: SystemConfig, const: DerivedConstants,
                 setup_id: int) -> Tuple[NetworkRealization, int]:
    """Build the setup's network, retrying placement on fresh substreams"""
    for attempt in range(PLACEMENT_RETRIES):
        try:
            return build_network(substream(cfg.seed, setup_id, NETWORK, attempt), cfg, const), attempt
        except PlacementError as e:
            print(f"Warning: setup {setup_id}: {e}; retrying with a new substream")

    last = PLACEMENT_RETRIES
    return build_network(substream(cfg.seed, setup_id, NETWORK, last), cfg, const), last


def block_channels(cfg: SystemConfig, const: DerivedConstants, network: NetworkRealization,
                   setup_id: int, block: int, variant: str,
                   setup_offsets: UEOffsets):
    """Channels of one block for the calibrated or offset variant"""
    K, L = network.K, network.L
    H = draw_small_scale(substream(cfg.seed, setup_id, FADING, block), (K, L, cfg.N_AP, cfg.N_UE))

    if variant == 'calibrated':
        offsets = UEOffsets.identity(K, cfg.N_UE)
    elif cfg.redraw_offsets_per_block:
        offsets = draw_ue_offsets(substream(cfg.seed, setup_id, OFFSETS, block + 1), K, cfg.N_UE)
    else:
        offsets = setup_offsets

    pilot_rng = substream(cfg.seed, setup_id, PILOTS, block)
    return realize_channels(H, network.beta, network.pilot_group, offsets, cfg, const, pilot_rng)


def setup_rho_norms(cfg: SystemConfig, const: DerivedConstants, network: NetworkRealization,
                    setup_id: int, variants: Sequence[str], precoders: Sequence[str],
                    setup_offsets: UEOffsets) -> Tuple[Dict, Dict]:
    """
    Unit precoders of every block and, for centralized allocation, their
    setup-average norms.
    """
    cache: Dict[Tuple[str, str], List] = {}
    norms: Dict[Tuple[str, str], np.ndarray] = {}
    for variant in variants:
        for block in range(cfg.n_blocks_per_setup):
            channels = block_channels(cfg, const, network, setup_id, block, variant, setup_offsets)
            for precoder in precoders:
                cache.setdefault((variant, precoder), []).append(
                    unit_precoders(channels, network, cfg, const, precoder)
                )
        for precoder in precoders:
            if POWER_ALLOCATION[precoder] == 'centralized':
                norms[(variant, precoder)] = np.mean(
                    [fro_norms_per_ue(W, network.a) for W, _ in cache[(variant, precoder)]], axis=0
                )
    return cache, norms


def run_setup(cfg: SystemConfig, setup_id: int,
              modes: Sequence[str] = MODES, precoders: Sequence[str] = PRECODERS,
              codebook: Optional[SpaceTimeCodebook] = None,
              collect_geometry: bool = False) -> SetupResult:
    """Simulate every block of one setup for each requested mode and precoder"""
    started = time.perf_counter()
    const = derive_constants(cfg)
    codebook = codebook or build_codebook(cfg.M_o, cfg.design)
    simulator = LinkSimulator(cfg, const, codebook)

    network, retries = draw_network(cfg, const, setup_id)
    setup_offsets = draw_ue_offsets(substream(cfg.seed, setup_id, OFFSETS, 0), network.K, cfg.N_UE)

    variants = sorted({CHANNEL_VARIANT[mode] for mode in modes})
    cache, norms = setup_rho_norms(cfg, const, network, setup_id, variants, precoders, setup_offsets)

    tallies = {(mode, precoder): _Tally.zeros(network.K) for mode in modes for precoder in precoders}
    for block in range(cfg.n_blocks_per_setup):
        for variant in variants:
            channels = block_channels(cfg, const, network, setup_id, block, variant, setup_offsets)
            for precoder in precoders:
                W_unit, flags = cache[(variant, precoder)][block]
                precoded = scale_precoders(W_unit, flags, network, cfg, const, precoder,
                                           norms.get((variant, precoder)))
                power_ratio = float(np.max(ap_radiated_power(precoded.W, network.a, precoded.M)))
                power_ratio /= const.p_ap_total_W

                for mode in modes:
                    if CHANNEL_VARIANT[mode] != variant:
                        continue
                    # Same data and noise for every mode
                    rng = substream(cfg.seed, setup_id, DATA, block)
                    result = simulator.simulate_block(network, channels, precoded, rng, mode)

                    tally = tallies[(mode, precoder)]
                    tally.bit_errors += result.bit_errors()
                    tally.bits += result.bits_per_ue
                    tally.regularized += result.flags
                    tally.evaluations += result.metric_evaluations
                    if precoded.allocation == 'distributed':
                        tally.max_power_ratio = max(tally.max_power_ratio, power_ratio)

    rows = []
    max_ratio = 0.0
    for (mode, precoder), tally in tallies.items():
        max_ratio = max(max_ratio, tally.max_power_ratio)
        for k in range(network.K):
            ber = float(tally.bit_errors[k] / tally.bits[k])
            rows.append(TrialMetrics(
                setup_id=setup_id, ue_id=k, mode=mode, precoder=precoder,
                bits_total=int(tally.bits[k]), bit_errors=int(tally.bit_errors[k]),
                ber=ber, se=float(se_from_ber(ber, const.pre_log(mode), cfg.M_o)),
                regularized_blocks=int(tally.regularized[k]),
                metric_evaluations=int(tally.evaluations[k]),
            ))

    metadata = {
        'max_ap_power_ratio': max_ratio,
        'placement_retries': retries,
        'setups_completed': 1,
    }
    return SetupResult(
        setup_id=setup_id,
        report=AggregateReport(rows=rows, metadata=metadata),
        geometry=geometry_rows(network, setup_id) if collect_geometry else [],
        retries=retries,
        elapsed_s=time.perf_counter() - started,
    )


def _run_setup_task(task: Tuple) -> SetupResult:
    return run_setup(*task)


def run_metadata(cfg: SystemConfig, const: DerivedConstants,
                 codebook: SpaceTimeCodebook) -> Dict:
    """Configuration-derived values echoed in every report"""
    return {
        'seed': cfg.seed,
        'n_setups': cfg.n_setups,
        'n_blocks_per_setup': cfg.n_blocks_per_setup,
        'design': cfg.design,
        'detector': cfg.detector,
        'P_f_coherent': round(const.P_f_coherent, 12),
        'P_f_dstbc': round(const.P_f_dstbc, 12),
        'G': const.G,
        'n_s': const.n_s,
        'full_search_cost': codebook.full_search_cost,
        'decoupled_cost': codebook.decoupled_cost,
        'encoder_multiplications_per_codeword': codebook.L_k ** 3,
        'correlation_multiplications_per_codeword': correlation_multiplications(const.N_b, codebook.L_k),
    }


def run_monte_carlo(cfg: SystemConfig, modes: Optional[Sequence[str]] = None,
                    precoders: Optional[Sequence[str]] = None, workers: int = 1,
                    verbose: bool = True,
                    geometry: Optional[List[dict]] = None) -> AggregateReport:
    """
    Run cfg.n_setups setups and reduce them in setup order.

    modes and precoders default to the configured ones. When geometry is a
    list, AP/UE coordinates of every setup are appended to it.
    """
    modes = list(modes or [cfg.mode])
    precoders = list(precoders or [cfg.precoder])
    for mode in modes:
        if mode not in MODES:
            raise ConfigError(f"must be one of {', '.join(MODES)}, got {mode!r}", 'mode')
    for precoder in precoders:
        if precoder not in PRECODERS:
            raise ConfigError(f"must be one of {', '.join(PRECODERS)}, got {precoder!r}", 'precoder')

    const = derive_constants(cfg)
    codebook = build_codebook(cfg.M_o, cfg.design)
    collect = geometry is not None
    tasks = [(cfg, setup_id, modes, precoders, codebook, collect) for setup_id in range(cfg.n_setups)]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = executor.map(_run_setup_task, tasks)
            results = list(_report_progress(results, cfg.n_setups, verbose))
    else:
        results = list(_report_progress(map(_run_setup_task, tasks), cfg.n_setups, verbose))

    report = reduce(AggregateReport.combine, (r.report for r in results), AggregateReport.empty())
    report.metadata.update(run_metadata(cfg, const, codebook))
    if collect:
        for result in results:
            geometry.extend(result.geometry)
    return report


def _report_progress(results, total: int, verbose: bool):
    for i, result in enumerate(results, 1):
        if verbose:
            regularized = result.report.regularized_blocks()
            print(f"[{i}/{total}] Setup {result.setup_id} ✓ ({result.elapsed_s:.1f}s)")
            if regularized:
                print(f"  Warning: {regularized} UE-blocks used a regularized Gram matrix")
        yield result


def sweep_config(cfg: SystemConfig, key: str, value) -> SystemConfig:
    """Config for one sweep point; N_UE sweeps keep one stream per antenna"""
    overrides = {key: value}
    if key == 'N_UE':
        overrides['N_s'] = value
    return cfg.replace(**overrides)


def run_sweep(cfg: SystemConfig, key: str, values: Sequence,
              modes: Optional[Sequence[str]] = None, precoders: Optional[Sequence[str]] = None,
              workers: int = 1, verbose: bool = True,
              geometry: Optional[List[dict]] = None) -> AggregateReport:
    """Repeat the run for every value of one configuration key"""
    report = AggregateReport.empty()
    constants = {}
    for value in values:
        point = sweep_config(cfg, key, value)
        if verbose:
            print(f"\nSweep {key} = {value}")
        points_geometry: Optional[List[dict]] = [] if geometry is not None else None
        partial = run_monte_carlo(point, modes, precoders, workers, verbose, points_geometry)
        if geometry is not None:
            geometry.extend({**row, 'sweep_key': key, 'sweep_value': value} for row in points_geometry)
        for row in partial.rows:
            row.sweep_key = key
            row.sweep_value = value
        constants[str(value)] = {name: partial.metadata[name]
                                 for name in ('P_f_coherent', 'P_f_dstbc', 'G', 'n_s')}
        report = report.combine(AggregateReport(rows=partial.rows, metadata=partial.metadata))

    report.metadata['sweep_key'] = key
    report.metadata['sweep_values'] = list(values)
    report.metadata['sweep_constants'] = constants
    return report
