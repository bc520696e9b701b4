"""Selective inference for change points in multi-dimensional Gaussian sequences."""

from ._cpsi import (
    AggregationSpec,
    ArgumentError,
    ConsistencyError,
    DetectionResult,
    InsufficientDataError,
    KroneckerCovariance,
    KsResult,
    LocalTest,
    NumericalError,
    ParseError,
    PowerEstimate,
    SelectiveTest,
    TruncationInterval,
    ar1_covariance,
    cell_covariance,
    detect,
    detect_multiple,
    kolmogorov_sf,
    ks_uniform,
    local_estimates,
    naive_p_value,
    null_p_values,
    power_estimate,
    selective_p_value,
    selective_test,
)

__version__ = "0.1.0"
