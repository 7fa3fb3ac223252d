"""Concurrent multiscale thermoelastic topology optimization."""

from ._core import (
    ConfigError,
    DegenerateCellError,
    InvalidArgumentError,
    IoError,
    NonConvergenceError,
    OptimizerStallError,
    RunConfig,
    ThermotopError,
    analyze,
    density_filter,
    homogenize,
    load_config,
    parse_config,
    plane_stress_tensor,
    run,
    seed_micro,
    validate_gradients,
)

__all__ = [
    "ConfigError",
    "DegenerateCellError",
    "InvalidArgumentError",
    "IoError",
    "NonConvergenceError",
    "OptimizerStallError",
    "RunConfig",
    "ThermotopError",
    "analyze",
    "density_filter",
    "homogenize",
    "load_config",
    "parse_config",
    "plane_stress_tensor",
    "run",
    "seed_micro",
    "validate_gradients",
]
