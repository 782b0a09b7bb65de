#!/usr/bin/env python3
"""
Exception types raised by the simulator
"""

from typing import Optional


class SimulationError(Exception):
    """Base class for every error the simulator reports to the user"""


class ConfigError(SimulationError, ValueError):
    """Invalid or unreadable scenario configuration"""

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class PlacementError(SimulationError, RuntimeError):
    """Hard-core AP placement ran out of draws"""

    def __init__(self, placed: int, requested: int, draws: int) -> None:
        self.placed = placed
        self.requested = requested
        self.draws = draws
        super().__init__(
            f"placed only {placed}/{requested} APs after {draws:,} draws"
        )


class CodecError(SimulationError, ValueError):
    """Space-time codec misuse: bad design, index or stream length"""


class OutputError(SimulationError, OSError):
    """Result or geometry file could not be written or read"""
