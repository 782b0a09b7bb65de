#!/usr/bin/env python3
"""
Unit tests for channel.py module
"""

import dataclasses

import numpy as np
import pytest
from scipy import stats

from dstbcsim.channel import (UEOffsets, draw_small_scale, draw_ue_offsets, mmse_estimate,
                              realize_channels, true_channels)
from dstbcsim.config import SystemConfig, derive_constants


class TestFadingAndOffsets:
    """Test random draws"""

    def test_small_scale_unit_variance(self):
        H = draw_small_scale(np.random.default_rng(0), (200, 100))
        assert np.mean(np.abs(H) ** 2) == pytest.approx(1.0, rel=0.02)
        assert abs(np.mean(H)) < 0.02

    def test_offsets_are_unit_modulus(self):
        offsets = draw_ue_offsets(np.random.default_rng(0), 5, 4)
        assert offsets.phi_tx.shape == (5, 4)
        np.testing.assert_allclose(np.abs(offsets.phi_tx), 1.0)
        np.testing.assert_allclose(np.abs(offsets.phi_rx), 1.0)
        np.testing.assert_allclose(np.abs(offsets.mixing), 1.0)

    def test_offset_phases_are_uniform(self):
        offsets = draw_ue_offsets(np.random.default_rng(1), 500, 4)
        phases = np.mod(np.angle(offsets.phi_rx).ravel(), 2 * np.pi)
        assert stats.kstest(phases, stats.uniform(0.0, 2 * np.pi).cdf).pvalue > 0.001

    def test_identity_offsets(self):
        offsets = UEOffsets.identity(3, 2)
        np.testing.assert_array_equal(offsets.mixing, np.ones((3, 2)))


class TestTrueChannels:
    """Test UL/DL channel construction"""

    def setup_method(self):
        rng = np.random.default_rng(4)
        self.beta = rng.uniform(1e-9, 1e-7, size=(3, 4))
        self.H = draw_small_scale(rng, (3, 4, 8, 2))
        self.offsets = draw_ue_offsets(rng, 3, 2)

    def test_reciprocity_with_calibrated_ues(self):
        G_ul, G_dl = true_channels(self.beta, self.H, UEOffsets.identity(3, 2))
        assert G_ul.shape == (3, 4, 8, 2)
        assert G_dl.shape == (3, 4, 2, 8)
        np.testing.assert_allclose(G_dl, np.conj(np.swapaxes(G_ul, -1, -2)))

    def test_offsets_break_reciprocity(self):
        G_ul, G_dl = true_channels(self.beta, self.H, self.offsets)
        G = np.sqrt(self.beta)[:, :, np.newaxis, np.newaxis] * self.H
        k, l = 1, 2
        np.testing.assert_allclose(G_ul[k, l], G[k, l] @ np.diag(self.offsets.phi_tx[k]))
        np.testing.assert_allclose(G_dl[k, l], np.diag(self.offsets.phi_rx[k]) @ G[k, l].conj().T)
        assert not np.allclose(G_dl, np.conj(np.swapaxes(G_ul, -1, -2)))


class TestMMSEEstimate:
    """Test the pilot-based channel estimate"""

    def setup_method(self):
        self.cfg = SystemConfig(L=4, K=3, L_k=2)
        self.const = derive_constants(self.cfg)
        rng = np.random.default_rng(7)
        self.beta = rng.uniform(1e-10, 1e-7, size=(3, 4))
        H = draw_small_scale(rng, (3, 4, 8, 2))
        self.G_ul, _ = true_channels(self.beta, H, draw_ue_offsets(rng, 3, 2))

    def test_shared_pilot_gives_proportional_estimates(self):
        pilot_group = np.array([0, 0, 1])
        G_hat, _ = mmse_estimate(self.G_ul, self.beta, pilot_group, self.cfg, self.const,
                                 np.random.default_rng(0))
        for l in range(4):
            ratio = self.beta[0, l] / self.beta[1, l]
            np.testing.assert_allclose(G_hat[0, l], ratio * G_hat[1, l])

    def test_error_variance_bounds(self):
        _, err_var = mmse_estimate(self.G_ul, self.beta, np.array([0, 0, 1]), self.cfg,
                                   self.const, np.random.default_rng(0))
        assert err_var.shape == (3, 4)
        assert np.all(err_var >= 0.0)
        assert np.all(err_var <= self.beta)

    def test_contamination_raises_error_variance(self):
        _, shared = mmse_estimate(self.G_ul, self.beta, np.array([0, 0, 1]), self.cfg,
                                  self.const, np.random.default_rng(0))
        _, distinct = mmse_estimate(self.G_ul, self.beta, np.array([0, 1, 2]), self.cfg,
                                    self.const, np.random.default_rng(0))
        assert np.all(shared[:2] >= distinct[:2])
        np.testing.assert_allclose(shared[2], distinct[2])

    def test_estimate_tracks_channel_at_high_snr(self):
        G_hat, _ = mmse_estimate(self.G_ul, self.beta, np.array([0, 1, 2]), self.cfg,
                                 self.const, np.random.default_rng(0))
        error = np.linalg.norm(G_hat - self.G_ul) / np.linalg.norm(self.G_ul)
        assert error < 0.01


class TestMMSEStatistics:
    """Sample moments of the estimate over many independent antennas"""

    def setup_method(self):
        self.cfg = SystemConfig(L=2, K=3, L_k=2)
        const = derive_constants(self.cfg)
        self.gain = self.cfg.tau_p * const.p_ue_total_W / self.cfg.N_UE
        # Pilot SNR between 0.3 and 1 keeps the error variance sizeable
        self.const = dataclasses.replace(const, ul_noise_power_W=self.gain * 1e-9)
        self.beta = np.array([[1.0, 0.5], [0.8, 0.3], [0.6, 1.0]]) * 1e-9
        H = draw_small_scale(np.random.default_rng(11), (3, 2, 20000, 2))
        self.G_ul = np.sqrt(self.beta)[:, :, np.newaxis, np.newaxis] * H

    def _estimate(self, pilot_group, const=None):
        return mmse_estimate(self.G_ul, self.beta, np.array(pilot_group), self.cfg,
                             const or self.const, np.random.default_rng(12))

    @pytest.mark.parametrize('pilot_group', [[0, 1, 2], [0, 0, 1]])
    def test_estimate_energy_is_beta_minus_error(self, pilot_group):
        G_hat, err_var = self._estimate(pilot_group)
        energy = np.mean(np.abs(G_hat) ** 2, axis=(2, 3))
        np.testing.assert_allclose(energy, self.beta - err_var, rtol=0.05)

    @pytest.mark.parametrize('pilot_group', [[0, 1, 2], [0, 0, 1]])
    def test_error_matches_reported_variance(self, pilot_group):
        G_hat, err_var = self._estimate(pilot_group)
        error = np.mean(np.abs(self.G_ul - G_hat) ** 2, axis=(2, 3))
        np.testing.assert_allclose(error, err_var, rtol=0.05)

    def test_error_is_orthogonal_to_estimate(self):
        G_hat, _ = self._estimate([0, 0, 1])
        cross = np.mean(G_hat * np.conj(self.G_ul - G_hat), axis=(2, 3))
        assert np.all(np.abs(cross) < 0.03 * self.beta)

    def test_noiseless_without_sharing_is_exact(self):
        noiseless = dataclasses.replace(self.const, ul_noise_power_W=0.0)
        G_hat, err_var = self._estimate([0, 1, 2], const=noiseless)
        np.testing.assert_allclose(G_hat, self.G_ul, rtol=1e-9)
        np.testing.assert_allclose(err_var, 0.0, atol=1e-24)


class TestRealizeChannels:
    """Test block assembly"""

    def test_perfect_csi(self):
        cfg = SystemConfig(L=4, K=2, perfect_csi=True)
        const = derive_constants(cfg)
        rng = np.random.default_rng(0)
        beta = rng.uniform(1e-9, 1e-7, size=(2, 4))
        H = draw_small_scale(rng, (2, 4, 8, 2))
        channels = realize_channels(H, beta, np.array([0, 1]), draw_ue_offsets(rng, 2, 2),
                                    cfg, const, rng)
        np.testing.assert_array_equal(channels.G_ul_hat, channels.G_ul_true)
        np.testing.assert_array_equal(channels.err_var, np.zeros((2, 4)))

    def test_estimated_csi(self):
        cfg = SystemConfig(L=4, K=2)
        const = derive_constants(cfg)
        rng = np.random.default_rng(0)
        beta = rng.uniform(1e-9, 1e-7, size=(2, 4))
        H = draw_small_scale(rng, (2, 4, 8, 2))
        channels = realize_channels(H, beta, np.array([0, 1]), UEOffsets.identity(2, 2),
                                    cfg, const, rng)
        assert not np.array_equal(channels.G_ul_hat, channels.G_ul_true)
        assert np.all(channels.err_var > 0)
