#!/usr/bin/env python3
"""
Shared builders for small, fully controlled links
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from dstbcsim.channel import (ChannelRealization, UEOffsets, draw_small_scale, draw_ue_offsets,
                              realize_channels)
from dstbcsim.config import DerivedConstants, SystemConfig, derive_constants
from dstbcsim.dstbc import build_codebook
from dstbcsim.link import LinkSimulator
from dstbcsim.precoding import PrecoderSet, build_precoders
from dstbcsim.topology import NetworkRealization, cluster_aps

AP_GRID = np.array([[10.0, 10.0], [90.0, 90.0], [10.0, 90.0], [90.0, 10.0]])
CLUSTER_GAINS = np.array([1e-7, 5e-8, 2e-8, 1e-8])


@dataclass
class LinkFixture:
    cfg: SystemConfig
    const: DerivedConstants
    network: NetworkRealization
    channels: ChannelRealization
    precoders: PrecoderSet
    simulator: LinkSimulator


def single_ue_link(L_k: int = 2, N_UE: int = 2, N_s: int = 2, seed: int = 0,
                   offsets: Optional[UEOffsets] = None, calibrated: bool = False,
                   precoder: str = 'zisi', **overrides) -> LinkFixture:
    """
    One UE served by every AP of an L_k-AP network with perfect CSI and no
    noise unless overridden. Offsets are random unless given or calibrated.
    """
    values = dict(L=L_k, K=1, N_AP=8, N_UE=N_UE, N_s=N_s, L_k=L_k, area_side_m=100.0,
                  perfect_csi=True, noiseless=True, n_setups=1, n_blocks_per_setup=1,
                  precoder=precoder)
    values.update(overrides)
    cfg = SystemConfig(**values)
    const = derive_constants(cfg)
    rng = np.random.default_rng(seed)

    beta = CLUSTER_GAINS[np.newaxis, :L_k].copy()
    a, row_map = cluster_aps(beta, L_k)
    network = NetworkRealization(
        ap_pos=AP_GRID[:L_k].copy(), ue_pos=np.array([[40.0, 50.0]]), beta=beta,
        a=a, row_map=row_map, pilot_group=np.zeros(1, dtype=np.int64),
    )

    H = draw_small_scale(rng, (1, L_k, cfg.N_AP, N_UE))
    if calibrated:
        offsets = UEOffsets.identity(1, N_UE)
    elif offsets is None:
        offsets = draw_ue_offsets(rng, 1, N_UE)

    channels = realize_channels(H, beta, network.pilot_group, offsets, cfg, const, rng)
    precoders = build_precoders(channels, network, cfg, const, precoder)
    simulator = LinkSimulator(cfg, const, build_codebook(cfg.M_o, cfg.design))
    return LinkFixture(cfg, const, network, channels, precoders, simulator)
