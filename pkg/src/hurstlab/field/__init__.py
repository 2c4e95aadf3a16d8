"""fBm as a Gaussian field in (time, Hurst)."""
from .covariance import (
    CovarianceModel,
    cross_covariance,
    default_model,
    grid_points,
    increment_second_moment,
    rectangular_increment_second_moment,
)
from .kernels import (
    HurstRange,
    kernel_K1,
    kernel_K2,
    mvn_integrand,
    normalization_constant,
    raw_variance_at_one,
    resolve_mode,
)
from .noise import NoiseGeometry, WhiteNoiseGrid, choose_truncation, tail_variance
from .samplers import (
    ExactFieldSampler,
    FbmField,
    ProjectionPlan,
    ProjectionSampler,
    projection_plan,
    sample_field_exact,
    sample_field_mvn,
)

__all__ = [
    "CovarianceModel", "cross_covariance", "default_model", "grid_points",
    "increment_second_moment", "rectangular_increment_second_moment",
    "HurstRange", "kernel_K1", "kernel_K2", "mvn_integrand", "normalization_constant",
    "raw_variance_at_one", "resolve_mode", "NoiseGeometry", "WhiteNoiseGrid",
    "choose_truncation", "tail_variance", "ExactFieldSampler", "FbmField", "ProjectionPlan",
    "ProjectionSampler", "projection_plan", "sample_field_exact", "sample_field_mvn",
]
