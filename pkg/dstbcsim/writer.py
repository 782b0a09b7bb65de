#!/usr/bin/env python3
"""
Result serialization: per-UE CSV/JSON reports and the geometry dump
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .config import SUPPORTED_OUTPUT_FORMATS, DerivedConstants, SystemConfig
from .errors import ConfigError, OutputError
from .metrics import AggregateReport, TrialMetrics

CSV_COLUMNS = ['setup_id', 'ue_id', 'mode', 'precoder', 'ber', 'se']
SWEEP_COLUMNS = ['sweep_key', 'sweep_value']
GEOMETRY_COLUMNS = ['setup_id', 'entity', 'id', 'x_m', 'y_m']


def _plain(value: Any) -> Any:
    """numpy scalars and arrays as JSON-native values"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def results_frame(report: AggregateReport) -> pd.DataFrame:
    """Rows of the CSV report; sweep columns only when the run swept a key"""
    swept = any(row.sweep_key is not None for row in report.rows)
    columns = CSV_COLUMNS + (SWEEP_COLUMNS if swept else [])
    records = [{column: getattr(row, column) for column in columns} for row in report.rows]
    return pd.DataFrame(records, columns=columns)


def write_results(report: AggregateReport, path: Union[str, Path], output_format: str = 'csv',
                  cfg: Optional[SystemConfig] = None,
                  const: Optional[DerivedConstants] = None) -> Path:
    """Write the report as CSV or as JSON with config and derived constants"""
    if output_format not in SUPPORTED_OUTPUT_FORMATS:
        raise ConfigError(
            f"must be one of {', '.join(SUPPORTED_OUTPUT_FORMATS)}, got {output_format!r}", 'format'
        )
    output_path = Path(path)

    try:
        if output_format == 'csv':
            results_frame(report).to_csv(output_path, index=False, lineterminator='\n')
        else:
            document = {
                'config': cfg.to_dict() if cfg is not None else {},
                'derived': const.to_dict() if const is not None else {},
                'metadata': report.metadata,
                'rows': [row.to_dict() for row in report.rows],
            }
            output_path.write_text(json.dumps(document, indent=2, default=_plain) + '\n',
                                   encoding='utf-8')
    except OSError as e:
        raise OutputError(f"cannot write {output_path}: {e}") from e

    return output_path


def read_results(path: Union[str, Path]) -> AggregateReport:
    """Load a JSON report written by write_results"""
    input_path = Path(path)
    try:
        document: Dict[str, Any] = json.loads(input_path.read_text(encoding='utf-8'))
    except OSError as e:
        raise OutputError(f"cannot read {input_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise OutputError(f"{input_path} is not a JSON report: {e}") from e

    rows = [TrialMetrics(**row) for row in document.get('rows', [])]
    return AggregateReport(rows=rows, metadata=document.get('metadata', {}))


def geometry_path(output_path: Union[str, Path]) -> Path:
    """<stem>_geometry.csv next to the results file"""
    output_path = Path(output_path)
    return output_path.with_name(f"{output_path.stem}_geometry.csv")


def write_geometry(rows: List[dict], path: Union[str, Path]) -> Path:
    """AP/UE coordinates of every setup as CSV"""
    output_path = Path(path)
    extra = [key for key in (rows[0] if rows else {}) if key not in GEOMETRY_COLUMNS]
    frame = pd.DataFrame(rows, columns=GEOMETRY_COLUMNS + extra)
    try:
        frame.to_csv(output_path, index=False, lineterminator='\n')
    except OSError as e:
        raise OutputError(f"cannot write {output_path}: {e}") from e
    return output_path
