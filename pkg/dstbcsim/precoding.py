#!/usr/bin/env python3
"""
ZISI and P-MMSE precoders, the UE decoding matrix and power allocation
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .channel import ChannelRealization
from .config import POWER_ALLOCATION, DerivedConstants, SystemConfig
from .topology import NetworkRealization

# Gram matrices with a larger condition number are regularized
GRAM_CONDITION_LIMIT = 1e12
GRAM_REGULARIZATION = 1e-12


@dataclass
class PrecoderSet:
    """Scaled precoders of one block and the coefficients used to scale them"""
    W: np.ndarray          # (K, L, N_AP, N_UE), zero outside the serving clusters
    rho: np.ndarray        # (K, L) distributed or (K,) centralized
    M: np.ndarray          # (N_UE, N_s)
    allocation: str
    flags: np.ndarray      # (K,) True when a Gram matrix had to be regularized

    @property
    def regularized(self) -> bool:
        return bool(np.any(self.flags))


def decoding_matrix(N_UE: int, N_s: int) -> np.ndarray:
    """M = I_{N_s} kron 1_{N_UE/N_s}: column j sums antenna group j"""
    if N_s < 1 or N_UE % N_s != 0:
        raise ValueError(f"N_UE={N_UE} is not a multiple of N_s={N_s}")
    return np.kron(np.eye(N_s), np.ones((N_UE // N_s, 1)))


def zisi_precoder(G_hat: np.ndarray, rho: float = 1.0) -> Tuple[np.ndarray, bool]:
    """
    sqrt(rho) * G (G^H G)^{-1}; returns the precoder and whether the Gram
    matrix had to be regularized with eps*I.
    """
    gram = G_hat.conj().T @ G_hat
    regularized = False
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition > GRAM_CONDITION_LIMIT:
        trace = np.real(np.trace(gram))
        if trace <= 0:
            return np.zeros_like(G_hat), True
        gram = gram + GRAM_REGULARIZATION * trace / gram.shape[0] * np.eye(gram.shape[0])
        regularized = True

    W = G_hat @ np.linalg.inv(gram)
    return np.sqrt(rho) * W, regularized


def pmmse_precoder(G_ul_hat: np.ndarray, err_var: np.ndarray, eta: float, sigma2: float,
                   a: np.ndarray, rho: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Partial MMSE precoders for every UE.

    For UE k only UEs whose clusters overlap its own enter the regularized
    inverse, and the inverse is taken over the APs serving any of them;
    outside that set the solution is exactly zero. Returns (K, L, N_AP, N_UE)
    with blocks kept for the serving APs of each UE.
    """
    K, L, N_AP, N_UE = G_ul_hat.shape
    if err_var.shape != (K, L) or a.shape != (K, L):
        raise ValueError(
            f"shape mismatch: estimates {G_ul_hat.shape}, err_var {err_var.shape}, a {a.shape}"
        )
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive for the regularized inverse")
    if rho is None:
        rho = np.ones(K)

    serving = a.astype(bool)
    partners = (a.astype(float) @ a.T.astype(float)) > 0
    W = np.zeros_like(G_ul_hat)

    for k in range(K):
        group = np.flatnonzero(partners[k])
        aps = np.flatnonzero(np.any(serving[group], axis=0))
        n = aps.size * N_AP

        # (n, |group| * N_UE) masked stacked estimates
        masked = G_ul_hat[np.ix_(group, aps)] * serving[np.ix_(group, aps)][:, :, np.newaxis, np.newaxis]
        stacked = masked.transpose(1, 2, 0, 3).reshape(n, group.size * N_UE)

        error_cov = N_UE * np.sum(err_var[np.ix_(group, aps)] * serving[np.ix_(group, aps)], axis=0)
        matrix = eta * (stacked @ stacked.conj().T)
        matrix[np.diag_indices(n)] += eta * np.repeat(error_cov, N_AP) + sigma2

        own = G_ul_hat[k, aps] * serving[k, aps][:, np.newaxis, np.newaxis]
        solution = scipy.linalg.solve(matrix, own.reshape(n, N_UE), assume_a='her')
        blocks = (np.sqrt(rho[k]) * eta * solution).reshape(aps.size, N_AP, N_UE)

        keep = serving[k, aps]
        W[k, aps[keep]] = blocks[keep]

    return W


def power_alloc_distributed(beta: np.ndarray, a: np.ndarray, W_unit: np.ndarray,
                            rho_max: float) -> np.ndarray:
    """
    rho_{k,l} = rho_max / ||W_{k,l}||_F^2 * sqrt(beta_{k,l}) / sum_{k' in K_l} sqrt(beta_{k',l})

    W_unit holds the precoders computed with rho = 1. APs serving nobody get
    no coefficients.
    """
    serving = a.astype(bool)
    weights = np.where(serving, np.sqrt(beta), 0.0)
    totals = weights.sum(axis=0)
    share = np.divide(weights, totals, out=np.zeros_like(weights), where=totals > 0)

    fro2 = np.sum(np.abs(W_unit) ** 2, axis=(-2, -1))
    usable = serving & (fro2 > 0)
    rho_norm = np.divide(rho_max, fro2, out=np.zeros_like(fro2), where=usable)
    return rho_norm * share


def power_alloc_centralized(beta: np.ndarray, a: np.ndarray, W_fro_means: np.ndarray,
                            rho_max: float, varsigma: float, kappa: float) -> np.ndarray:
    """
    rho_k = rho_max / rho_k^norm * (sum_{l in L_k} beta^s)^kappa
            / max_{l in L_k} sum_{i in K_l} (sum_{l' in L_i} beta_{i,l'}^s)^kappa
    """
    serving = a.astype(bool)
    weight = np.sum(np.where(serving, beta ** varsigma, 0.0), axis=1) ** kappa   # (K,)
    ap_load = serving.T.astype(float) @ weight                                  # (L,)
    worst = np.max(np.where(serving, ap_load[np.newaxis, :], 0.0), axis=1)       # (K,)

    fraction = np.divide(weight, worst, out=np.zeros_like(weight), where=worst > 0)
    scale = np.divide(rho_max, W_fro_means, out=np.zeros_like(W_fro_means), where=W_fro_means > 0)
    return scale * fraction


def unit_precoders(channels: ChannelRealization, network: NetworkRealization,
                   cfg: SystemConfig, const: DerivedConstants,
                   precoder: str) -> Tuple[np.ndarray, np.ndarray]:
    """Precoders with rho = 1 and the per-UE regularization flags"""
    K, L = network.a.shape
    flags = np.zeros(K, dtype=bool)

    if precoder == 'zisi':
        W = np.zeros_like(channels.G_ul_hat)
        for k, l in zip(*np.nonzero(network.a)):
            W[k, l], regularized = zisi_precoder(channels.G_ul_hat[k, l])
            flags[k] |= regularized
        return W, flags

    if precoder == 'pmmse':
        eta = const.p_ue_total_W / cfg.N_UE
        W = pmmse_precoder(channels.G_ul_hat, channels.err_var, eta,
                           const.ul_noise_power_W, network.a)
        return W, flags

    raise ValueError(f"unknown precoder {precoder!r}")


def fro_norms_per_ue(W: np.ndarray, a: np.ndarray) -> np.ndarray:
    """(K,) sum over serving APs of ||W_{k,l}||_F^2"""
    return np.sum(np.sum(np.abs(W) ** 2, axis=(-2, -1)) * a, axis=1)


def build_precoders(channels: ChannelRealization, network: NetworkRealization,
                    cfg: SystemConfig, const: DerivedConstants, precoder: str,
                    rho_norm: Optional[np.ndarray] = None) -> PrecoderSet:
    """
    Scaled precoders for one block. ZISI uses distributed allocation from the
    block's own norms; P-MMSE uses centralized allocation with rho_norm, the
    setup-average of the unit-precoder norms (the block's own when omitted).
    """
    W_unit, flags = unit_precoders(channels, network, cfg, const, precoder)
    return scale_precoders(W_unit, flags, network, cfg, const, precoder, rho_norm)


def scale_precoders(W_unit: np.ndarray, flags: np.ndarray, network: NetworkRealization,
                    cfg: SystemConfig, const: DerivedConstants, precoder: str,
                    rho_norm: Optional[np.ndarray] = None) -> PrecoderSet:
    """Apply the power allocation paired with the precoder to unit precoders"""
    allocation = POWER_ALLOCATION[precoder]
    M = decoding_matrix(cfg.N_UE, cfg.N_s)

    if allocation == 'distributed':
        rho = power_alloc_distributed(network.beta, network.a, W_unit, const.p_ap_total_W)
        W = np.sqrt(rho)[:, :, np.newaxis, np.newaxis] * W_unit
    else:
        if rho_norm is None:
            rho_norm = fro_norms_per_ue(W_unit, network.a)
        rho = power_alloc_centralized(network.beta, network.a, rho_norm, const.p_ap_total_W,
                                      cfg.varsigma, cfg.kappa)
        W = np.sqrt(rho)[:, np.newaxis, np.newaxis, np.newaxis] * W_unit

    return PrecoderSet(W=W, rho=rho, M=M, allocation=allocation, flags=flags)


def ap_radiated_power(W: np.ndarray, a: np.ndarray, M: Optional[np.ndarray] = None) -> np.ndarray:
    """
    (L,) per-AP power sum_{k in K_l} ||W_{k,l} M||_F^2 for unit-power,
    uncorrelated stream symbols.

    Each AP sends W_{k,l} M s, so with N_b > 1 this differs from
    ||W_{k,l}||_F^2, which is what the allocation normalizes. DSTBC rows are
    scaled by sqrt(L_k) and carry the same unit power per epoch on average
    over a codeword. Without M every stream drives one UE antenna.
    """
    if M is not None:
        W = W @ M
    return np.sum(np.sum(np.abs(W) ** 2, axis=(-2, -1)) * a, axis=0)
