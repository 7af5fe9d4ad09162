"""flowcast: multi-step-ahead daily streamflow forecasting.

Sliding-window embedding of catchment time series, from-scratch recurrent
and convolutional forecasters trained by exact backpropagation, quantile
(pinball) training for extreme flows, and a flow-duration-curve switching
ensemble that routes each forecast to a quantile-specialised branch.
"""
from .series import (
    FEATURE_NAMES,
    STREAMFLOW_ROW,
    CatchmentSeries,
    ScalerParams,
    SplitSpec,
    WindowedDataset,
    apply_scale,
    chrono_split,
    embed,
    feature_matrix,
    fit_minmax,
    invert_scale,
    seasonal_encode,
)

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "STREAMFLOW_ROW",
    "CatchmentSeries",
    "ScalerParams",
    "SplitSpec",
    "WindowedDataset",
    "apply_scale",
    "chrono_split",
    "embed",
    "feature_matrix",
    "fit_minmax",
    "invert_scale",
    "seasonal_encode",
    "__version__",
]
