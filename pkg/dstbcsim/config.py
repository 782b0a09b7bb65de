#!/usr/bin/env python3
"""
Configuration and derived constants for the cell-free DSTBC simulator
"""

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from .errors import ConfigError

MODES = ('pcal', 'uncal', 'dstbc')
PRECODERS = ('zisi', 'pmmse')
DETECTORS = ('decoupled', 'full')

# Orthogonal design used for each serving-cluster size
DESIGN_FOR_CLUSTER = {
    2: 'alamouti2',
    4: 'ostbc4_rate34',
}

# Symbols carried by one codeword of each design
SYMBOLS_PER_CODEWORD = {
    'alamouti2': 2,
    'ostbc4_rate34': 3,
}

# Power allocation paired with each precoder
POWER_ALLOCATION = {
    'zisi': 'distributed',
    'pmmse': 'centralized',
}

THERMAL_NOISE_DBM_PER_HZ = -174.0
CONFIG_COMMENT = '#'


@dataclass
class ScenarioPreset:
    """Named set of overrides applied on top of the defaults"""
    overrides: Dict[str, Any]
    description: str


SCENARIO_PRESETS = {
    'baseline': ScenarioPreset(
        overrides={},
        description='L=40, K=20, N_AP=8, N_UE=2, N_s=2, L_k=2 (200 setups x 100 blocks)'
    ),
    'cluster4': ScenarioPreset(
        overrides={'L_k': 4},
        description='Baseline with 4-AP serving clusters (rate-3/4 design)'
    ),
    'desk': ScenarioPreset(
        overrides={'n_setups': 50, 'n_blocks_per_setup': 50},
        description='Baseline at desk scale (50 setups x 50 blocks)'
    ),
    'smoke': ScenarioPreset(
        overrides={'L': 8, 'K': 4, 'area_side_m': 200.0, 'n_setups': 2, 'n_blocks_per_setup': 2},
        description='Tiny network for quick checks'
    ),
}


@dataclass
class SystemConfig:
    """All scenario parameters; units are fixed by the field names"""
    L: int = 40
    K: int = 20
    N_AP: int = 8
    N_UE: int = 2
    N_s: int = 2
    L_k: int = 2
    area_side_m: float = 500.0
    tau_c: int = 200
    tau_p: int = 16
    tau_d: int = 184
    p_ue_total_mW: float = 100.0
    p_ap_total_mW: float = 200.0
    carrier_GHz: float = 3.5
    bandwidth_MHz: float = 20.0
    noise_figure_dB: float = 8.0
    shadow_sigma_dB: float = 4.0
    h_ap_m: float = 11.65
    h_ue_m: float = 1.65
    pathloss_intercept_dB: float = -30.5
    pathloss_slope_dB: float = 36.7
    M_o: int = 8
    mode: str = 'dstbc'
    precoder: str = 'zisi'
    detector: str = 'decoupled'
    varsigma: float = 0.2
    kappa: float = 0.5
    seed: int = 0
    n_setups: int = 200
    n_blocks_per_setup: int = 100
    perfect_csi: bool = False
    noiseless: bool = False
    redraw_offsets_per_block: bool = False
    reorth_interval: int = 32

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Raise ConfigError naming the first offending key"""
        for key in ('L', 'K', 'N_AP', 'N_UE', 'N_s', 'L_k', 'tau_c', 'tau_p', 'tau_d',
                    'M_o', 'n_setups', 'n_blocks_per_setup', 'reorth_interval'):
            if getattr(self, key) < 1:
                raise ConfigError(f"must be a positive integer, got {getattr(self, key)}", key)

        if self.tau_p + self.tau_d != self.tau_c:
            raise ConfigError(
                f"tau_p + tau_d must equal tau_c ({self.tau_p} + {self.tau_d} != {self.tau_c})", 'tau_d'
            )
        if self.N_s > self.N_UE:
            raise ConfigError(f"N_s={self.N_s} exceeds N_UE={self.N_UE}", 'N_s')
        if self.N_UE % self.N_s != 0:
            raise ConfigError("N_UE not divisible by N_s", 'N_UE')
        if self.tau_p % self.N_UE != 0:
            raise ConfigError(f"tau_p={self.tau_p} not divisible by N_UE={self.N_UE}", 'tau_p')
        if self.L_k not in DESIGN_FOR_CLUSTER:
            raise ConfigError(
                f"must be one of {sorted(DESIGN_FOR_CLUSTER)}, got {self.L_k}", 'L_k'
            )
        if self.L_k > self.L:
            raise ConfigError(f"L_k={self.L_k} exceeds L={self.L}", 'L_k')
        if self.tau_d // self.L_k < 2:
            raise ConfigError("tau_d too short for a reference block plus one codeword", 'tau_d')
        if self.M_o < 2 or self.M_o & (self.M_o - 1):
            raise ConfigError(f"must be a power of two, got {self.M_o}", 'M_o')
        if self.mode not in MODES:
            raise ConfigError(f"must be one of {', '.join(MODES)}, got {self.mode!r}", 'mode')
        if self.precoder not in PRECODERS:
            raise ConfigError(f"must be one of {', '.join(PRECODERS)}, got {self.precoder!r}", 'precoder')
        if self.detector not in DETECTORS:
            raise ConfigError(f"must be one of {', '.join(DETECTORS)}, got {self.detector!r}", 'detector')
        for key in ('varsigma', 'kappa'):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(f"must lie in [0, 1], got {getattr(self, key)}", key)
        for key in ('area_side_m', 'p_ue_total_mW', 'p_ap_total_mW', 'carrier_GHz', 'bandwidth_MHz'):
            if getattr(self, key) <= 0:
                raise ConfigError(f"must be positive, got {getattr(self, key)}", key)
        if self.shadow_sigma_dB < 0:
            raise ConfigError(f"must be non-negative, got {self.shadow_sigma_dB}", 'shadow_sigma_dB')

    @property
    def design(self) -> str:
        return DESIGN_FOR_CLUSTER[self.L_k]

    @property
    def N_b(self) -> int:
        return self.N_UE // self.N_s

    def replace(self, **overrides: Any) -> 'SystemConfig':
        """Validated copy with some fields changed"""
        unknown = set(overrides) - set(config_keys())
        if unknown:
            raise ConfigError("unknown configuration key", sorted(unknown)[0])
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants computed once from a SystemConfig"""
    noise_power_W: float
    ul_noise_power_W: float
    d_min_m: float
    G: int
    n_s: int
    N_b: int
    P_f_coherent: float
    P_f_dstbc: float
    n_data_symbols_coherent: int
    n_data_symbols_dstbc: int
    p_ap_total_W: float
    p_ue_total_W: float

    def pre_log(self, mode: str) -> float:
        return self.P_f_dstbc if mode == 'dstbc' else self.P_f_coherent

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def thermal_noise_W(bandwidth_MHz: float, noise_figure_dB: float = 0.0) -> float:
    """Receiver noise power in watts for the given bandwidth and noise figure"""
    noise_dBm = THERMAL_NOISE_DBM_PER_HZ + 10 * math.log10(bandwidth_MHz * 1e6) + noise_figure_dB
    return 10 ** ((noise_dBm - 30) / 10)


def derive_constants(cfg: SystemConfig) -> DerivedConstants:
    """Derive noise powers, block accounting and pre-log factors"""
    n_s = SYMBOLS_PER_CODEWORD[cfg.design]
    G = cfg.tau_d // cfg.L_k

    return DerivedConstants(
        noise_power_W=thermal_noise_W(cfg.bandwidth_MHz, cfg.noise_figure_dB),
        ul_noise_power_W=thermal_noise_W(cfg.bandwidth_MHz),
        d_min_m=math.sqrt(cfg.area_side_m ** 2 / cfg.L),
        G=G,
        n_s=n_s,
        N_b=cfg.N_UE // cfg.N_s,
        P_f_coherent=cfg.tau_d / cfg.tau_c,
        P_f_dstbc=(G - 1) * n_s / cfg.tau_c,
        n_data_symbols_coherent=cfg.tau_d,
        n_data_symbols_dstbc=(G - 1) * n_s,
        p_ap_total_W=cfg.p_ap_total_mW * 1e-3,
        p_ue_total_W=cfg.p_ue_total_mW * 1e-3,
    )


def config_keys() -> Dict[str, type]:
    """Map of configuration key to its declared type"""
    return {f.name: f.type for f in fields(SystemConfig)}


def coerce_value(key: str, raw: Any) -> Any:
    """Convert a raw (usually string) value to the type declared for key"""
    types = config_keys()
    if key not in types:
        raise ConfigError("unknown configuration key", key)

    target = types[key]
    if not isinstance(raw, str):
        if target is float and isinstance(raw, int) and not isinstance(raw, bool):
            return float(raw)
        return raw

    text = raw.strip()
    try:
        if target is bool:
            lowered = text.lower()
            if lowered in ('true', 'yes', 'on', '1'):
                return True
            if lowered in ('false', 'no', 'off', '0'):
                return False
            raise ValueError(text)
        if target is int:
            number = float(text)
            if not number.is_integer():
                raise ValueError(text)
            return int(number)
        if target is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {target.__name__}", key) from None

    return text.strip('"\'')


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse `key = value` lines; `#` starts a comment"""
    values: Dict[str, Any] = {}
    for line_number, line in enumerate(text.splitlines(), 1):
        content = line.split(CONFIG_COMMENT, 1)[0].strip()
        if not content:
            continue
        if '=' not in content:
            raise ConfigError(f"line {line_number}: expected 'key = value', got {content!r}")
        key, value = (part.strip() for part in content.split('=', 1))
        if not key:
            raise ConfigError(f"line {line_number}: missing key")
        values[key] = coerce_value(key, value)
    return values


def build_config(preset: Optional[str] = None,
                 file_values: Optional[Mapping[str, Any]] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> SystemConfig:
    """Apply defaults < preset < file values < overrides"""
    values: Dict[str, Any] = {}
    if preset is not None:
        if preset not in SCENARIO_PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; valid: {', '.join(SCENARIO_PRESETS)}", 'preset')
        values.update(SCENARIO_PRESETS[preset].overrides)
    if file_values:
        values.update(file_values)
    if overrides:
        values.update({key: coerce_value(key, value) for key, value in overrides.items()})
    return SystemConfig(**values)


def load_config(path: Union[str, Path],
                overrides: Optional[Mapping[str, Any]] = None,
                preset: Optional[str] = None) -> SystemConfig:
    """Load a configuration file; unspecified keys keep their defaults"""
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"configuration file not found: {config_path}")

    try:
        text = config_path.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read {config_path}: {e}") from e

    return build_config(preset=preset, file_values=parse_config_text(text), overrides=overrides)


# Defaults echoed in documentation and tests
DEFAULT_CONFIG = SystemConfig()
DEFAULT_OUTPUT_FORMAT = 'csv'
SUPPORTED_OUTPUT_FORMATS = ['csv', 'json']
