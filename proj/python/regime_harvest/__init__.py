"""Python bindings for the regime-shift harvesting library."""

from ._core import (
    CusumDetector,
    InverseGaussian,
    MarketParams,
    PolicySpec,
    ResourceParams,
    RhError,
    build_policy,
    calibrated_threshold,
    derive_constants,
    expected_delay,
    expected_detection_horizon,
    expected_time_to_catastrophe,
    extinction_probability,
    ig_first_passage,
    lambda_update,
    optimal_extraction,
    resource_rent,
    run_episode,
    solve_hjb,
    solve_kfe,
    solve_threshold,
)

__all__ = [
    "CusumDetector",
    "InverseGaussian",
    "MarketParams",
    "PolicySpec",
    "ResourceParams",
    "RhError",
    "build_policy",
    "calibrated_threshold",
    "derive_constants",
    "expected_delay",
    "expected_detection_horizon",
    "expected_time_to_catastrophe",
    "extinction_probability",
    "ig_first_passage",
    "lambda_update",
    "optimal_extraction",
    "resource_rent",
    "run_episode",
    "solve_hjb",
    "solve_kfe",
    "solve_threshold",
]
