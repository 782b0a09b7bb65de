#!/usr/bin/env python3
"""
Small-scale fading, UE hardware offsets, true UL/DL channels and MMSE estimates
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .config import DerivedConstants, SystemConfig


@dataclass
class UEOffsets:
    """Diagonals of the UE transmit and receive RF-branch offset matrices"""
    phi_tx: np.ndarray  # (K, N_UE) unit modulus
    phi_rx: np.ndarray  # (K, N_UE) unit modulus

    @classmethod
    def identity(cls, K: int, N_UE: int) -> 'UEOffsets':
        """Perfectly calibrated UE arrays"""
        ones = np.ones((K, N_UE), dtype=complex)
        return cls(phi_tx=ones, phi_rx=ones.copy())

    @property
    def mixing(self) -> np.ndarray:
        """(K, N_UE) diagonal of Phi_rx * Phi_tx^{-H}, the residual coherent gain"""
        return self.phi_rx / np.conj(self.phi_tx)


@dataclass
class ChannelRealization:
    """Channels of one coherence block, indexed [k, l]"""
    H: np.ndarray          # (K, L, N_AP, N_UE) small-scale fading
    G_ul_true: np.ndarray  # (K, L, N_AP, N_UE)
    G_dl_true: np.ndarray  # (K, L, N_UE, N_AP)
    G_ul_hat: np.ndarray   # (K, L, N_AP, N_UE)
    err_var: np.ndarray    # (K, L) per-entry estimation error variance
    offsets: UEOffsets


def draw_small_scale(rng: np.random.Generator, dims: Tuple[int, ...]) -> np.ndarray:
    """i.i.d. circularly-symmetric complex Gaussian entries with unit variance"""
    return (rng.standard_normal(dims) + 1j * rng.standard_normal(dims)) / np.sqrt(2)


def draw_ue_offsets(rng: np.random.Generator, K: int, N_UE: int) -> UEOffsets:
    """Unit-modulus offsets with phases uniform on [0, 2*pi)"""
    phi_tx = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(K, N_UE)))
    phi_rx = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(K, N_UE)))
    return UEOffsets(phi_tx=phi_tx, phi_rx=phi_rx)


def true_channels(beta: np.ndarray, H: np.ndarray,
                  offsets: UEOffsets) -> Tuple[np.ndarray, np.ndarray]:
    """
    UL channel G * Phi_tx and DL channel Phi_rx * G^H with calibrated APs,
    where G = sqrt(beta) * H.
    """
    G = np.sqrt(beta)[:, :, np.newaxis, np.newaxis] * H
    G_ul = G * offsets.phi_tx[:, np.newaxis, np.newaxis, :]
    G_dl = offsets.phi_rx[:, np.newaxis, :, np.newaxis] * np.conj(np.swapaxes(G, -1, -2))
    return G_ul, G_dl


def mmse_estimate(G_ul_true: np.ndarray, beta: np.ndarray, pilot_group: np.ndarray,
                  cfg: SystemConfig, const: DerivedConstants,
                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    MMSE estimate of the effective UL channels from one despread pilot
    observation per (pilot group, AP).

    UEs sharing a pilot group see the same observation, so their estimates
    at a given AP are proportional.
    """
    K, L, N_AP, N_UE = G_ul_true.shape
    n_groups = cfg.tau_p // cfg.N_UE
    pilot_power = const.p_ue_total_W / cfg.N_UE
    gain = cfg.tau_p * pilot_power
    sigma2 = const.ul_noise_power_W

    received = np.zeros((n_groups, L, N_AP, N_UE), dtype=complex)
    np.add.at(received, pilot_group, G_ul_true)
    noise = np.sqrt(sigma2) * draw_small_scale(rng, received.shape)
    y_p = np.sqrt(gain) * received + noise

    group_beta = np.zeros((n_groups, L))
    np.add.at(group_beta, pilot_group, beta)
    psi = gain * group_beta[pilot_group] + sigma2          # (K, L)

    scale = np.sqrt(gain) * beta / psi
    G_ul_hat = scale[:, :, np.newaxis, np.newaxis] * y_p[pilot_group]
    err_var = beta - gain * beta ** 2 / psi
    return G_ul_hat, np.maximum(err_var, 0.0)


def realize_channels(H: np.ndarray, beta: np.ndarray, pilot_group: np.ndarray,
                     offsets: UEOffsets, cfg: SystemConfig, const: DerivedConstants,
                     pilot_rng: np.random.Generator) -> ChannelRealization:
    """Assemble true and estimated channels for one block"""
    G_ul, G_dl = true_channels(beta, H, offsets)
    if cfg.perfect_csi:
        G_ul_hat, err_var = G_ul.copy(), np.zeros(beta.shape)
    else:
        G_ul_hat, err_var = mmse_estimate(G_ul, beta, pilot_group, cfg, const, pilot_rng)
    return ChannelRealization(H=H, G_ul_true=G_ul, G_dl_true=G_dl,
                              G_ul_hat=G_ul_hat, err_var=err_var, offsets=offsets)
