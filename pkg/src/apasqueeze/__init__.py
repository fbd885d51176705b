"""Squeezing and phase-space dynamics of a cavity-pumped atomic parametric amplifier."""
from .params import (
    ConfigError,
    DerivedParams,
    PhysicalConfig,
    UnstableFrequencyError,
    derive,
    load_config,
    reference_config,
    weak_coupling_check,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DerivedParams",
    "PhysicalConfig",
    "UnstableFrequencyError",
    "derive",
    "load_config",
    "reference_config",
    "weak_coupling_check",
    "__version__",
]
