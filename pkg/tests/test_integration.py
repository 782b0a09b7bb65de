#!/usr/bin/env python3
"""
Integration tests for the complete simulator
"""

import json
import shutil
import tempfile
from pathlib import Path

import pandas as pd
import pytest

from dstbcsim.config import build_config
from dstbcsim.main import SimulationProcessor
from dstbcsim.montecarlo import run_monte_carlo, run_sweep


@pytest.mark.integration
class TestSimulatorIntegration:
    """Command line runs on the smoke scenario"""

    def setup_method(self):
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _run(self, name, *extra):
        output = Path(self.temp_dir) / name
        result = SimulationProcessor().run(['--preset', 'smoke', '-o', str(output), '-q', *extra])
        return result, output

    def test_identical_arguments_give_identical_csv(self):
        result_a, first = self._run('a.csv', '--mode', 'all')
        result_b, second = self._run('b.csv', '--mode', 'all')
        assert result_a == result_b == 0
        assert first.read_bytes() == second.read_bytes()

        frame = pd.read_csv(first)
        assert list(frame.columns) == ['setup_id', 'ue_id', 'mode', 'precoder', 'ber', 'se']
        assert len(frame) == 2 * 4 * 3
        assert frame['ber'].between(0.0, 1.0).all()

    def test_seed_changes_geometry(self):
        self._run('a.csv', '--dump-geometry')
        self._run('b.csv', '--seed', '1', '--dump-geometry')
        first = (Path(self.temp_dir) / 'a_geometry.csv').read_bytes()
        second = (Path(self.temp_dir) / 'b_geometry.csv').read_bytes()
        assert first != second

    def test_json_report_with_geometry(self):
        result, output = self._run('run.json', '--precoder', 'all', '--dump-geometry')
        assert result == 0

        document = json.loads(output.read_text())
        assert document['metadata']['P_f_coherent'] == 0.92
        assert document['metadata']['P_f_dstbc'] == 0.91
        assert document['metadata']['setups_completed'] == 2
        assert document['config']['L'] == 8
        assert len(document['rows']) == 2 * 4 * 2

        geometry = pd.read_csv(Path(self.temp_dir) / 'run_geometry.csv')
        assert len(geometry) == 2 * (8 + 4)
        assert set(geometry['entity']) == {'ap', 'ue'}

    def test_sweep_run(self):
        result, output = self._run('sweep.csv', '--sweep', 'K=2,3', '--blocks', '1')
        assert result == 0
        frame = pd.read_csv(output)
        assert list(frame.columns)[-2:] == ['sweep_key', 'sweep_value']
        assert sorted(frame['sweep_value'].unique()) == [2, 3]

    def test_noiseless_calibrated_single_user(self):
        result, output = self._run('one.csv', '--set', 'K=1', '--noiseless', '--perfect-csi',
                                   '--mode', 'all')
        assert result == 0
        frame = pd.read_csv(output).set_index('mode')
        assert frame.loc['pcal', 'ber'].max() == 0.0
        assert frame.loc['dstbc', 'ber'].max() == 0.0
        assert frame.loc['pcal', 'se'].min() == pytest.approx(2.76)
        assert frame.loc['dstbc', 'se'].min() == pytest.approx(2.73)

    def test_invalid_arguments_exit_code(self, capsys):
        result, _ = self._run('bad.csv', '--set', 'N_UE=3', '--set', 'tau_p=12',
                              '--set', 'tau_d=188')
        assert result == 1
        assert 'N_UE not divisible by N_s' in capsys.readouterr().out

    def test_power_budget_over_full_run(self):
        report = run_monte_carlo(build_config(preset='smoke'), modes=['pcal', 'dstbc'],
                                 precoders=['zisi'], verbose=False)
        assert report.metadata['max_ap_power_ratio'] <= 1.0 + 1e-6


def medians(report):
    return {(mode, precoder): values for (_, mode, precoder), values in report.medians().items()}


@pytest.mark.slow
class TestDeskScaleTrends:
    """Qualitative behaviour of the baseline network at desk scale"""

    @classmethod
    def setup_class(cls):
        cls.cfg = build_config(preset='desk')
        cls.report = run_monte_carlo(cls.cfg, modes=['pcal', 'uncal', 'dstbc'],
                                     precoders=['zisi', 'pmmse'], verbose=False)

    def test_ber_ordering(self):
        summary = medians(self.report)
        for precoder in ('zisi', 'pmmse'):
            pcal = summary[('pcal', precoder)]['ber']
            uncal = summary[('uncal', precoder)]['ber']
            dstbc = summary[('dstbc', precoder)]['ber']
            assert pcal < dstbc < uncal
            assert 3 * dstbc < uncal
        assert summary[('dstbc', 'pmmse')]['ber'] < summary[('dstbc', 'zisi')]['ber']

    def test_dstbc_close_to_calibrated_after_pre_log(self):
        summary = medians(self.report)
        for precoder in ('zisi', 'pmmse'):
            pcal = summary[('pcal', precoder)]['se'] / 0.92
            dstbc = summary[('dstbc', precoder)]['se'] / 0.91
            assert dstbc == pytest.approx(pcal, rel=0.15)

    def test_pmmse_at_least_zisi_under_dstbc(self):
        summary = medians(self.report)
        assert summary[('dstbc', 'pmmse')]['se'] >= summary[('dstbc', 'zisi')]['se']

    def test_larger_clusters_trade_rate_for_reliability(self):
        report = run_monte_carlo(self.cfg.replace(L_k=4), modes=['dstbc'],
                                 precoders=['zisi', 'pmmse'], verbose=False)
        assert report.metadata['n_s'] == 3
        assert report.metadata['G'] == 46
        assert report.metadata['P_f_dstbc'] < self.report.metadata['P_f_dstbc']
        small = medians(self.report)
        large = medians(report)
        for precoder in ('zisi', 'pmmse'):
            assert large[('dstbc', precoder)]['se'] < small[('dstbc', precoder)]['se']
        # ZISI leaves no fading to average, so only P-MMSE holds its BER
        assert large[('dstbc', 'pmmse')]['ber'] <= 1.1 * small[('dstbc', 'pmmse')]['ber']

    def test_load_sweep(self):
        report = run_sweep(self.cfg, 'K', [10, 20, 30], modes=['dstbc'],
                           precoders=['zisi', 'pmmse'], verbose=False)
        averages = report.network_average_se()
        zisi_drop = averages[(10, 'dstbc', 'zisi')] - averages[(30, 'dstbc', 'zisi')]
        pmmse_drop = averages[(10, 'dstbc', 'pmmse')] - averages[(30, 'dstbc', 'pmmse')]
        assert pmmse_drop < zisi_drop

    def test_antenna_sweep_grows_sublinearly(self):
        report = run_sweep(self.cfg, 'N_UE', [2, 4], modes=['dstbc'], precoders=['pmmse'],
                           verbose=False)
        averages = report.network_average_se()
        two = averages[(2, 'dstbc', 'pmmse')]
        four = averages[(4, 'dstbc', 'pmmse')]
        assert four < 2 * two
