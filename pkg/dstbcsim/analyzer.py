#!/usr/bin/env python3
"""
Console summaries of simulation reports
"""

from typing import Any, Dict

from .metrics import AggregateReport

# Relative slack allowed on the per-AP power budget
POWER_BUDGET_TOLERANCE = 1e-6


class ReportAnalyzer:
    """Condenses an AggregateReport into medians and budget checks"""

    def summarize(self, report: AggregateReport) -> Dict[str, Any]:
        metadata = report.metadata
        ratio = metadata.get('max_ap_power_ratio')
        summary: Dict[str, Any] = {
            'rows': len(report),
            'medians': report.medians() if len(report) else {},
            'network_average_se': report.network_average_se() if len(report) else {},
            'P_f_coherent': metadata.get('P_f_coherent'),
            'P_f_dstbc': metadata.get('P_f_dstbc'),
            'max_ap_power_ratio': ratio,
            'power_budget_ok': ratio is None or ratio <= 1.0 + POWER_BUDGET_TOLERANCE,
            'regularized_blocks': report.regularized_blocks(),
            'full_search_cost': metadata.get('full_search_cost'),
            'decoupled_cost': metadata.get('decoupled_cost'),
            'encoder_multiplications_per_codeword': metadata.get('encoder_multiplications_per_codeword'),
            'correlation_multiplications_per_codeword':
                metadata.get('correlation_multiplications_per_codeword'),
        }
        return summary

    def print_summary(self, report: AggregateReport) -> None:
        """Print a boxed table of medians per (mode, precoder) and run checks"""
        summary = self.summarize(report)

        print("\n" + "=" * 64)
        print("SIMULATION SUMMARY")
        print("=" * 64)

        print(f"Rows: {summary['rows']:,} (one per UE and setup)")
        if summary['P_f_coherent'] is not None:
            print(f"Pre-log factor: coherent {summary['P_f_coherent']:.4f}, "
                  f"DSTBC {summary['P_f_dstbc']:.4f}")

        if summary['medians']:
            print(f"\n{'sweep':>8} {'mode':<6} {'precoder':<8} {'median BER':>12} "
                  f"{'median SE':>10} {'mean SE':>9}")
            for group, values in summary['medians'].items():
                sweep, mode, precoder = group
                label = '-' if sweep is None else str(sweep)
                print(f"{label:>8} {mode:<6} {precoder:<8} {values['ber']:>12.3e} "
                      f"{values['se']:>10.4f} {summary['network_average_se'][group]:>9.4f}")
            print()

        ratio = summary['max_ap_power_ratio']
        if ratio is None or ratio == 0.0:
            print("Power budget: not checked (no distributed allocation in this run)")
        elif summary['power_budget_ok']:
            print(f"✓ Per-AP power within budget (max ratio {ratio:.6f})")
        else:
            print(f"✗ Per-AP power exceeds budget (max ratio {ratio:.6f})")

        if summary['regularized_blocks']:
            print(f"Warning: {summary['regularized_blocks']:,} UE-blocks used a regularized Gram matrix")

        if summary['full_search_cost'] is not None:
            print(f"Detector metrics per codeword: full search {summary['full_search_cost']}, "
                  f"decoupled {summary['decoupled_cost']}")
            print(f"Encoder multiplications per codeword: "
                  f"{summary['encoder_multiplications_per_codeword']}")
            if summary['correlation_multiplications_per_codeword'] is not None:
                print(f"Receiver correlation multiplications per codeword: "
                      f"{summary['correlation_multiplications_per_codeword']}")

        print("=" * 64)
