#!/usr/bin/env python3
"""
Per-UE BER/SE records and their aggregation across setups
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from .config import MODES, PRECODERS

Number = Union[int, float]


def se_from_ber(ber: float, P_f: float, M_o: int) -> float:
    """SE = P_f * log2(M_o) * (1 - BER)"""
    if not 0.0 <= ber <= 1.0:
        raise ValueError(f"BER must lie in [0, 1], got {ber}")
    return P_f * np.log2(M_o) * (1.0 - ber)


def empirical_cdf(values: Iterable[float]) -> List[Tuple[float, float]]:
    """Sorted (value, fraction) pairs with fraction (i+1)/n at the i-th value"""
    samples = np.sort(np.asarray(list(values), dtype=float))
    if samples.size == 0:
        raise ValueError("empirical CDF needs at least one sample")
    fractions = np.arange(1, samples.size + 1) / samples.size
    return list(zip(samples.tolist(), fractions.tolist()))


@dataclass
class TrialMetrics:
    """Block-averaged result of one UE in one setup"""
    setup_id: int
    ue_id: int
    mode: str
    precoder: str
    bits_total: int
    bit_errors: int
    ber: float
    se: float
    regularized_blocks: int = 0
    metric_evaluations: int = 0
    sweep_key: Optional[str] = None
    sweep_value: Optional[Number] = None

    def sort_key(self) -> tuple:
        sweep = self.sweep_value if self.sweep_value is not None else 0
        return (sweep, self.setup_id, self.ue_id,
                MODES.index(self.mode), PRECODERS.index(self.precoder))

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


# Metadata entries merged by maximum and by summation; everything else must agree
MAX_METADATA = ('max_ap_power_ratio',)
SUM_METADATA = ('regularized_blocks', 'placement_retries', 'setups_completed')


@dataclass
class AggregateReport:
    """
    Canonically ordered TrialMetrics rows plus run metadata.

    combine() is associative and commutative, with empty() as identity, so
    setups may be reduced in any order.
    """
    rows: List[TrialMetrics] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> 'AggregateReport':
        return cls()

    def __post_init__(self) -> None:
        self.rows = sorted(self.rows, key=TrialMetrics.sort_key)

    def combine(self, other: 'AggregateReport') -> 'AggregateReport':
        metadata = dict(self.metadata)
        for key, value in other.metadata.items():
            if key not in metadata:
                metadata[key] = value
            elif key in MAX_METADATA:
                metadata[key] = max(metadata[key], value)
            elif key in SUM_METADATA:
                metadata[key] = metadata[key] + value
        return AggregateReport(rows=self.rows + other.rows, metadata=metadata)

    def __len__(self) -> int:
        return len(self.rows)

    def groups(self) -> List[Tuple[Optional[Number], str, str]]:
        """(sweep_value, mode, precoder) combinations present, in canonical order"""
        seen: Dict[Tuple, None] = {}
        for row in self.rows:
            seen.setdefault((row.sweep_value, row.mode, row.precoder), None)
        return sorted(seen, key=lambda g: (g[0] if g[0] is not None else 0,
                                           MODES.index(g[1]), PRECODERS.index(g[2])))

    def select(self, mode: str, precoder: str,
               sweep_value: Optional[Number] = None) -> List[TrialMetrics]:
        return [row for row in self.rows
                if row.mode == mode and row.precoder == precoder
                and row.sweep_value == sweep_value]

    def cdf(self, mode: str, precoder: str, metric: str = 'se',
            sweep_value: Optional[Number] = None) -> List[Tuple[float, float]]:
        """CDF over (UE, setup) samples of the block-averaged SE or BER"""
        return empirical_cdf(getattr(row, metric) for row in self.select(mode, precoder, sweep_value))

    def medians(self) -> Dict[Tuple[Optional[Number], str, str], Dict[str, float]]:
        summary = {}
        for group in self.groups():
            rows = self.select(group[1], group[2], group[0])
            summary[group] = {
                'ber': float(np.median([row.ber for row in rows])),
                'se': float(np.median([row.se for row in rows])),
            }
        return summary

    def network_average_se(self) -> Dict[Tuple[Optional[Number], str, str], float]:
        """Mean per-UE SE for every (sweep_value, mode, precoder)"""
        return {
            group: float(np.mean([row.se for row in self.select(group[1], group[2], group[0])]))
            for group in self.groups()
        }

    def regularized_blocks(self) -> int:
        return sum(row.regularized_blocks for row in self.rows)
