#!/usr/bin/env python3
"""
Unit tests for link.py module
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dstbcsim.channel import UEOffsets, draw_ue_offsets
from dstbcsim.dstbc import psk_constellation
from dstbcsim.link import BlockResult, slice_psk
from tests.helpers import single_ue_link


def run_block(link, mode, seed=0):
    return link.simulator.simulate_block(link.network, link.channels, link.precoders,
                                         np.random.default_rng(seed), mode)


def expected_soft(link, seed=0, mixing=None):
    """N_b * sum_l sqrt(rho_l) * s, optionally times the per-stream offset mixing"""
    cfg = link.cfg
    indices = np.random.default_rng(seed).integers(0, cfg.M_o, size=(1, cfg.N_s, cfg.tau_d))
    symbols = link.simulator.codebook.constellation[indices]
    amplitude = cfg.N_b * np.sum(np.sqrt(link.precoders.rho[0]))
    if mixing is not None:
        symbols = symbols * mixing[np.newaxis, :, np.newaxis]
    return amplitude * symbols


class TestSlicer:
    """Test nearest-phase PSK slicing"""

    def test_constellation_points(self):
        points, _ = psk_constellation(8)
        np.testing.assert_array_equal(slice_psk(points, 8), np.arange(8))

    def test_decision_boundaries(self):
        # boundary between points 0 and 1 goes to 0, across the wrap also to 0
        assert slice_psk(np.array([1 + 1j]), 4)[0] == 0
        assert slice_psk(np.array([1 - 1j]), 4)[0] == 0

    def test_zero_maps_to_first_point(self):
        assert slice_psk(np.array([0j]), 8)[0] == 0

    def test_negative_angles(self):
        assert slice_psk(np.array([-1j]), 8)[0] == 6
        assert slice_psk(np.array([-1 + 0j]), 8)[0] == 4

    @given(re=st.floats(-1e3, 1e3), im=st.floats(-1e3, 1e3), exponent=st.integers(0, 20),
           M_o=st.sampled_from([2, 4, 8, 16]))
    def test_scale_invariance(self, re, im, exponent, M_o):
        z = np.array([complex(re, im)])
        assert slice_psk(z * 2.0 ** exponent, M_o)[0] == slice_psk(z, M_o)[0]

    @given(m=st.integers(0, 15), radius=st.floats(1e-6, 1e6))
    def test_scaled_points_slice_to_themselves(self, m, radius):
        points, _ = psk_constellation(16)
        assert slice_psk(np.array([radius * points[m]]), 16)[0] == m


class TestNoiselessDSTBC:
    """Differential transmission needs no phase reference"""

    @pytest.mark.parametrize("L_k,blocks", [(2, 11), (4, 23)])
    def test_no_errors_over_ten_thousand_codewords(self, L_k, blocks):
        codewords = 0
        for seed in range(5):
            link = single_ue_link(L_k=L_k, seed=seed)
            for block in range(blocks):
                result = run_block(link, 'dstbc', seed=block)
                assert result.bit_errors()[0] == 0
                codewords += link.cfg.N_s * (link.const.G - 1)
        assert codewords >= 10_000

    def test_no_errors_with_antenna_groups(self):
        link = single_ue_link(L_k=2, N_UE=4, N_s=2)
        result = run_block(link, 'dstbc')
        assert result.bit_errors()[0] == 0

    def test_full_search_detector(self):
        link = single_ue_link(L_k=2, detector='full')
        result = run_block(link, 'dstbc')
        assert result.bit_errors()[0] == 0
        assert result.metric_evaluations[0] == 2 * 91 * 64

    def test_block_accounting(self):
        link = single_ue_link(L_k=2)
        result = run_block(link, 'dstbc')
        assert result.bits_per_ue == 2 * 182 * 3
        assert result.metric_evaluations[0] == 2 * 91 * 16
        assert result.encoder_multiplications == 2 * 91 * 8
        assert result.correlation_multiplications == 2 * 91 * 4
        assert result.soft is None


class TestCoherentTransmission:
    """Coherent precoding with and without UE calibration"""

    @pytest.mark.parametrize("N_UE,N_s", [(2, 2), (4, 2), (4, 1)])
    def test_calibrated_soft_estimate(self, N_UE, N_s):
        link = single_ue_link(L_k=2, N_UE=N_UE, N_s=N_s, calibrated=True)
        result = run_block(link, 'pcal', seed=5)
        np.testing.assert_allclose(result.soft, expected_soft(link, seed=5), rtol=1e-9, atol=0)
        assert result.bit_errors()[0] == 0
        assert result.metric_evaluations[0] == N_s * 184 * 8

    def test_uncalibrated_soft_estimate_carries_offset_mixing(self):
        rng = np.random.default_rng(0)
        for draw in range(1000):
            offsets = draw_ue_offsets(rng, 1, 2)
            link = single_ue_link(L_k=2, offsets=offsets, seed=draw)
            result = run_block(link, 'uncal', seed=draw)
            expected = expected_soft(link, seed=draw, mixing=offsets.mixing[0])
            np.testing.assert_allclose(result.soft, expected, rtol=1e-9, atol=0)

    def test_one_sector_rotation_flips_one_bit_per_symbol(self):
        rotation = np.full((1, 2), np.exp(2j * np.pi / 8))
        offsets = UEOffsets(phi_tx=np.ones((1, 2), dtype=complex), phi_rx=rotation)
        link = single_ue_link(L_k=2, offsets=offsets)
        result = run_block(link, 'uncal')
        assert result.bit_errors()[0] / result.bits_per_ue == pytest.approx(1 / 3, abs=1e-12)

    def test_tiny_power_gives_coin_flip_bits(self):
        link = single_ue_link(L_k=2, calibrated=True, noiseless=False, p_ap_total_mW=1e-12)
        errors = 0
        bits = 0
        for block in range(5):
            result = run_block(link, 'pcal', seed=block)
            errors += result.bit_errors()[0]
            bits += result.bits_per_ue
        assert errors / bits == pytest.approx(0.5, abs=0.03)

    def test_tiny_power_dstbc(self):
        link = single_ue_link(L_k=2, noiseless=False, p_ap_total_mW=1e-12)
        result = run_block(link, 'dstbc')
        assert result.bit_errors()[0] / result.bits_per_ue == pytest.approx(0.5, abs=0.06)

    def test_mode_defaults_to_config(self):
        link = single_ue_link(L_k=2, mode='pcal', calibrated=True)
        result = link.simulator.simulate_block(link.network, link.channels, link.precoders,
                                               np.random.default_rng(0))
        assert result.soft is not None


class TestDetectorsAgree:
    """Both detectors make identical decisions under noise"""

    def test_same_bits_from_full_and_decoupled(self):
        overrides = dict(L_k=2, noiseless=False, p_ap_total_mW=0.02)
        decoupled = run_block(single_ue_link(detector='decoupled', **overrides), 'dstbc', seed=9)
        full = run_block(single_ue_link(detector='full', **overrides), 'dstbc', seed=9)
        np.testing.assert_array_equal(full.tx_bits, decoupled.tx_bits)
        np.testing.assert_array_equal(full.rx_bits, decoupled.rx_bits)

    def test_same_bits_for_four_ap_clusters(self):
        overrides = dict(L_k=4, noiseless=False, p_ap_total_mW=0.02)
        decoupled = run_block(single_ue_link(detector='decoupled', **overrides), 'dstbc', seed=2)
        full = run_block(single_ue_link(detector='full', **overrides), 'dstbc', seed=2)
        np.testing.assert_array_equal(full.rx_bits, decoupled.rx_bits)


class TestBlockResult:
    """Test the per-block record"""

    def test_bit_errors(self):
        result = BlockResult(
            tx_bits=np.array([[0, 1, 1, 0], [1, 1, 1, 1]], dtype=np.uint8),
            rx_bits=np.array([[0, 1, 0, 0], [0, 0, 1, 1]], dtype=np.uint8),
            flags=np.zeros(2, dtype=bool),
            metric_evaluations=np.zeros(2, dtype=np.int64),
        )
        np.testing.assert_array_equal(result.bit_errors(), [1, 2])
        assert result.bits_per_ue == 4
