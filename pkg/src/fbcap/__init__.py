"""Feedback capacity of Gaussian channels with state-space colored noise."""

from .state_space import (
    ChannelModel,
    StateSpaceNoise,
    ValidationReport,
    build_ar1,
    build_ma1,
    load_channel_json,
    load_noise_json,
    noise_psd,
    stationary_state_covariance,
    validate,
)
from .kalman import (
    FilterState,
    RiccatiSolution,
    entropy_rate,
    kalman_filter_step,
    riccati_step,
    solve_dare,
)
from .capacity import (
    CapacitySolution,
    ConvergenceReport,
    Policy,
    SolverOptions,
    ar_iid_rate,
    ar_stationary_capacity,
    closed_loop_check,
    extract_policy,
    kim_ma_capacity,
    ma_capacity_fixed_point,
    scop_finite_n,
    solve_capacity,
    solve_capacity_scalar,
    waterfilling_capacity,
)
from .coding import (
    KERNEL,
    SchemeConfig,
    SimResult,
    SmootherState,
    pam_map,
    simulate,
    smoother_step,
    wilson_interval,
)
from . import errors

__version__ = "1.0.0"

__all__ = [
    "ChannelModel",
    "StateSpaceNoise",
    "ValidationReport",
    "build_ar1",
    "build_ma1",
    "load_channel_json",
    "load_noise_json",
    "noise_psd",
    "stationary_state_covariance",
    "validate",
    "FilterState",
    "RiccatiSolution",
    "entropy_rate",
    "kalman_filter_step",
    "riccati_step",
    "solve_dare",
    "CapacitySolution",
    "ConvergenceReport",
    "Policy",
    "SolverOptions",
    "ar_iid_rate",
    "ar_stationary_capacity",
    "closed_loop_check",
    "extract_policy",
    "kim_ma_capacity",
    "ma_capacity_fixed_point",
    "scop_finite_n",
    "solve_capacity",
    "solve_capacity_scalar",
    "waterfilling_capacity",
    "KERNEL",
    "SchemeConfig",
    "SimResult",
    "SmootherState",
    "pam_map",
    "simulate",
    "smoother_step",
    "wilson_interval",
    "errors",
]
