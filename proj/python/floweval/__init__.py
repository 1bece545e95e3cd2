"""Metrics for predicted steady incompressible-flow fields.

Thin wrapper around the C++ core: geometry handling (mask <-> SDF), discrete
momentum residuals, the unified 0-100 score, and deterministic dataset splits.
"""

from ._floweval import (
    EvalConfig,
    FlowEvalError,
    Grid,
    band_mask,
    eikonal_residual,
    evaluate_sample,
    extrapolatory_split,
    gradient,
    laplacian,
    m1,
    m2,
    m3,
    manufactured_sample,
    mask_from_sdf,
    momentum_residual,
    random_split,
    score,
    sdf_from_mask,
)

__version__ = "0.1.0"

__all__ = [
    "EvalConfig",
    "FlowEvalError",
    "Grid",
    "band_mask",
    "eikonal_residual",
    "evaluate_sample",
    "extrapolatory_split",
    "gradient",
    "laplacian",
    "m1",
    "m2",
    "m3",
    "manufactured_sample",
    "mask_from_sdf",
    "momentum_residual",
    "random_split",
    "score",
    "sdf_from_mask",
]
