#!/usr/bin/env python3
"""
One coherence block of downlink transmission: coherent precoded PSK or
differential space-time coded transmission from the serving clusters.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .channel import ChannelRealization, draw_small_scale
from .config import DerivedConstants, SystemConfig
from .dstbc import (EncoderState, SpaceTimeCodebook, build_block, correlation_multiplications,
                    detect_ml_decoupled, detect_ml_full, extract_stream, indices_to_bits,
                    rows_for_ap, segment_stream)
from .precoding import PrecoderSet
from .topology import NetworkRealization


@dataclass
class BlockResult:
    """Bits sent to and detected by every UE in one block"""
    tx_bits: np.ndarray              # (K, n_bits) uint8
    rx_bits: np.ndarray              # (K, n_bits) uint8
    flags: np.ndarray                # (K,) precoder regularization used
    metric_evaluations: np.ndarray   # (K,) detector metric evaluations
    encoder_multiplications: int = 0  # complex multiplications per UE for differential encoding
    correlation_multiplications: int = 0  # per UE for the (Y^t)^H Y^{t-1} products
    soft: Optional[np.ndarray] = None  # (K, N_s, tau_d) coherent soft estimates

    def bit_errors(self) -> np.ndarray:
        return np.count_nonzero(self.tx_bits != self.rx_bits, axis=1)

    @property
    def bits_per_ue(self) -> int:
        return self.tx_bits.shape[1]


def slice_psk(z: np.ndarray, M_o: int) -> np.ndarray:
    """
    Index of the PSK point nearest in phase to z. Points on a decision
    boundary go to the lower index (0 across the wrap), z = 0 maps to 0.
    """
    x = np.angle(z) * M_o / (2 * np.pi)
    index = np.ceil(x - 0.5).astype(np.int64) % M_o
    return np.where(x == -0.5, 0, index)


class LinkSimulator:
    """Runs single blocks for a fixed configuration and codebook"""

    def __init__(self, cfg: SystemConfig, const: DerivedConstants,
                 codebook: SpaceTimeCodebook) -> None:
        self.cfg = cfg
        self.const = const
        self.codebook = codebook

    def _noise(self, rng: np.random.Generator, shape) -> np.ndarray:
        noise = draw_small_scale(rng, shape)
        if self.cfg.noiseless:
            return np.zeros(shape, dtype=complex)
        return np.sqrt(self.const.noise_power_W) * noise

    @staticmethod
    def effective_gains(channels: ChannelRealization, precoders: PrecoderSet) -> np.ndarray:
        """(K, K, L, N_UE, N_s) gain G_dl[k, l] W[i, l] M from UE i's streams to UE k"""
        return np.einsum('klua,ilab,bj->kiluj',
                         channels.G_dl_true, precoders.W, precoders.M, optimize=True)

    def simulate_coherent_block(self, network: NetworkRealization,
                                channels: ChannelRealization, precoders: PrecoderSet,
                                rng: np.random.Generator) -> BlockResult:
        """
        tau_d epochs of precoded PSK. Each UE combines its antenna groups with
        M^H and slices the result against the calibrated phase reference.
        """
        cfg = self.cfg
        K = network.K
        n_epochs = self.const.n_data_symbols_coherent
        points = self.codebook.constellation

        indices = rng.integers(0, cfg.M_o, size=(K, cfg.N_s, n_epochs))
        gains = self.effective_gains(channels, precoders).sum(axis=2)   # (K, K, N_UE, N_s)
        y = np.einsum('kiuj,ijp->kup', gains, points[indices], optimize=True)
        y = y + self._noise(rng, y.shape)
        soft = np.einsum('uj,kup->kjp', precoders.M, y)

        detected = slice_psk(soft, cfg.M_o)
        bps = self.codebook.bits_per_symbol
        return BlockResult(
            tx_bits=indices_to_bits(indices.reshape(K, -1), self.codebook.labels, bps),
            rx_bits=indices_to_bits(detected.reshape(K, -1), self.codebook.labels, bps),
            flags=precoders.flags.copy(),
            metric_evaluations=np.full(K, cfg.N_s * n_epochs * cfg.M_o, dtype=np.int64),
            soft=soft,
        )

    def encode_streams(self, network: NetworkRealization,
                       indices: np.ndarray) -> Tuple[np.ndarray, int]:
        """
        Differentially encode every (UE, stream) and lay the cumulative
        codeword rows out per serving AP.

        indices holds (K, N_s, (G-1)*n_s) symbol indices. Returns
        (K, L, G, N_s, L_k) transmit rows including the reference block C^0 = I;
        rows are zero for APs outside a UE's cluster. Also returns the encoder
        multiplication count per UE.
        """
        cfg, const, codebook = self.cfg, self.const, self.codebook
        K, L_k = network.K, codebook.L_k

        segments = segment_stream(indices, const.n_s, const.G)     # (K, N_s, G-1, n_s)
        X = codebook.codewords(segments)                             # (K, N_s, G-1, L_k, L_k)

        state = EncoderState(L_k, batch_shape=(K, cfg.N_s), reorth_interval=cfg.reorth_interval)
        C_prev = [state.C_prev.copy()]
        for t in range(const.G - 1):
            state.differential_encode(X[:, :, t])
            C_prev.append(state.C_prev.copy())

        # C^t = C^{t-1} X^t with C^{-1} X^0 = I for the reference block
        eye = np.broadcast_to(np.eye(L_k, dtype=complex), (K, cfg.N_s, 1, L_k, L_k))
        prev_stack = np.concatenate([eye, np.stack(C_prev[:-1], axis=2)], axis=2)
        x_stack = np.concatenate([eye, X], axis=2)

        rows = np.zeros((K, network.L, cfg.N_s, const.G, L_k), dtype=complex)
        for m in range(1, L_k + 1):
            assigned = (network.row_map == m)[:, :, np.newaxis, np.newaxis, np.newaxis]
            rows = rows + assigned * rows_for_ap(prev_stack, x_stack, m)[:, np.newaxis]

        block = build_block([rows[:, :, j] for j in range(cfg.N_s)], cfg.N_s)
        return block, state.multiplications // K

    def simulate_dstbc_block(self, network: NetworkRealization,
                             channels: ChannelRealization, precoders: PrecoderSet,
                             rng: np.random.Generator) -> BlockResult:
        """
        One block of differential space-time coded transmission: a reference
        codeword followed by G-1 data codewords per stream, each spanning L_k
        symbol epochs. Multi-user interference is summed exactly.
        """
        cfg, const, codebook = self.cfg, self.const, self.codebook
        K, L_k = network.K, codebook.L_k
        N_b = const.N_b

        indices = rng.integers(0, cfg.M_o, size=(K, cfg.N_s, const.n_data_symbols_dstbc))
        blocks, multiplications = self.encode_streams(network, indices)   # (K, L, G, N_s, L_k)

        gains = self.effective_gains(channels, precoders)             # (K, K, L, N_UE, N_s)
        # Rows carry unit power per epoch for each stream
        Y = np.sqrt(L_k) * np.einsum('kiluj,iltjq->ktuq', gains, blocks, optimize=True)
        Y = Y + self._noise(rng, Y.shape)                             # (K, G, N_UE, L_k)

        detected = np.empty((K, cfg.N_s, const.G - 1, const.n_s), dtype=np.int64)
        for j in range(cfg.N_s):
            stream = extract_stream(Y, j, N_b)
            if cfg.detector == 'full':
                _, detected[:, j] = detect_ml_full(stream[:, 1:], stream[:, :-1], codebook)
            else:
                detected[:, j] = detect_ml_decoupled(stream[:, 1:], stream[:, :-1], codebook)

        cost = codebook.full_search_cost if cfg.detector == 'full' else codebook.decoupled_cost
        bps = codebook.bits_per_symbol
        return BlockResult(
            tx_bits=indices_to_bits(indices.reshape(K, -1), codebook.labels, bps),
            rx_bits=indices_to_bits(detected.reshape(K, -1), codebook.labels, bps),
            flags=precoders.flags.copy(),
            metric_evaluations=np.full(K, cfg.N_s * (const.G - 1) * cost, dtype=np.int64),
            encoder_multiplications=multiplications,
            correlation_multiplications=(cfg.N_s * (const.G - 1)
                                         * correlation_multiplications(N_b, L_k)),
        )

    def simulate_block(self, network: NetworkRealization, channels: ChannelRealization,
                       precoders: PrecoderSet, rng: np.random.Generator,
                       mode: Optional[str] = None) -> BlockResult:
        mode = mode or self.cfg.mode
        if mode == 'dstbc':
            return self.simulate_dstbc_block(network, channels, precoders, rng)
        return self.simulate_coherent_block(network, channels, precoders, rng)
