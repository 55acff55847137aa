"""Feedback-driven nonlinear spin ensembles."""

from ._core import (
    ConfigError,
    EquilibriumTilt,
    Error,
    FrequencyDistribution,
    InsufficientData,
    IntegrationConfig,
    InvalidArgument,
    LimitCycleSolution,
    PhysicalParams,
    Trajectory,
    __version__,
    analyze_point,
    hz_to_rad,
    limit_cycle_stable,
    lyapunov,
    no_signal_threshold,
    parse_config,
    robustness_curve,
    simulate,
    solve_limit_cycle,
    spectrum,
    uniform_no_signal_threshold,
)

try:
    from ._core import run_cli
except ImportError:  # built without the command-line tool
    run_cli = None

__all__ = [name for name in dir() if not name.startswith("_")]
