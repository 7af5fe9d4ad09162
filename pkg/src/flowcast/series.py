"""Canonical daily time-series model: scaling, seasonal encoding, sliding-window
embedding into supervised samples, and chronological train/test splitting.

All arrays are float64. Feature matrices are laid out ``(F, T)`` with the
feature order given by :data:`FEATURE_NAMES`; embedded datasets are
``(samples, window, features)``.
"""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

#: Per-timestep feature order used throughout the pipeline.
FEATURE_NAMES = ("precip", "tmin", "tmax", "streamflow", "doy_sin", "doy_cos")

#: Row index of the forecast target (streamflow) inside a feature matrix.
STREAMFLOW_ROW = FEATURE_NAMES.index("streamflow")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CatchmentSeries:
    """One station's aligned daily record.

    ``dates`` is a ``datetime64[D]`` vector; all value vectors share its
    length. ``streamflow`` is the forecast target in mm/day.
    """

    station_id: str
    dates: np.ndarray
    precip: np.ndarray
    tmin: np.ndarray
    tmax: np.ndarray
    streamflow: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", _freeze(np.asarray(self.dates, dtype="datetime64[D]")))
        for name in ("precip", "tmin", "tmax", "streamflow"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name), dtype=np.float64)))
        n = len(self.dates)
        for name in ("precip", "tmin", "tmax", "streamflow"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"station {self.station_id}: '{name}' length != dates length")

    def __len__(self) -> int:
        return len(self.dates)

    def validate(self, allow_missing: bool = False) -> None:
        """Check the daily-record invariants; raise ValueError on violation.

        With ``allow_missing`` the value vectors may contain NaN (the state
        between CSV loading and gap filling), but present streamflow values
        must still be non-negative and dates must be consecutive days.
        """
        if len(self) == 0:
            raise ValueError(f"station {self.station_id}: empty series")
        if len(self) > 1:
            steps = np.diff(self.dates).astype("timedelta64[D]").astype(int)
            if not np.all(steps == 1):
                bad = int(np.argmax(steps != 1))
                raise ValueError(
                    f"station {self.station_id}: dates not consecutive around {self.dates[bad]}"
                )
        flow = self.streamflow
        present = ~np.isnan(flow)
        if not allow_missing:
            for name in ("precip", "tmin", "tmax", "streamflow"):
                if np.isnan(getattr(self, name)).any():
                    raise ValueError(f"station {self.station_id}: missing values in '{name}'")
        if np.any(flow[present] < 0):
            day = self.dates[present][np.argmax(flow[present] < 0)]
            raise ValueError(f"station {self.station_id}: negative streamflow on {day}")

    def slice(self, start: int, stop: int) -> "CatchmentSeries":
        return CatchmentSeries(
            station_id=self.station_id,
            dates=self.dates[start:stop],
            precip=self.precip[start:stop],
            tmin=self.tmin[start:stop],
            tmax=self.tmax[start:stop],
            streamflow=self.streamflow[start:stop],
        )


def seasonal_encode(day) -> tuple[float, float]:
    """Encode the time of year as (sin, cos) of the day-of-year angle.

    ``day`` may be a ``datetime.date`` or a ``numpy.datetime64``. The angle is
    ``2*pi*d/Y`` with ``d`` the zero-based day of year and ``Y`` the actual
    year length (365 or 366), so Dec 31 always falls just below a full period.
    """
    if isinstance(day, np.datetime64):
        day = day.astype("datetime64[D]").astype(_dt.date)
    doy = day.timetuple().tm_yday - 1
    year_len = 366 if _isleap(day.year) else 365
    angle = 2.0 * np.pi * doy / year_len
    return float(np.sin(angle)), float(np.cos(angle))


def _isleap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def seasonal_channels(dates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`seasonal_encode` over a ``datetime64[D]`` vector."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    years = dates.astype("datetime64[Y]")
    doy = (dates - years.astype("datetime64[D]")).astype(np.int64)
    year_len = ((years + 1).astype("datetime64[D]") - years.astype("datetime64[D]")).astype(np.int64)
    angle = 2.0 * np.pi * doy / year_len
    return np.sin(angle), np.cos(angle)


def feature_matrix(series: CatchmentSeries) -> np.ndarray:
    """Assemble the ``(6, T)`` input matrix for one station.

    Rows follow :data:`FEATURE_NAMES`: the four forcings plus the derived
    seasonal sine/cosine channels.
    """
    sin_c, cos_c = seasonal_channels(series.dates)
    return np.stack([series.precip, series.tmin, series.tmax, series.streamflow, sin_c, cos_c])


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature min/max fitted on training-period columns only."""

    mins: np.ndarray
    maxs: np.ndarray
    degenerate: np.ndarray  # True where min == max

    def __post_init__(self):
        object.__setattr__(self, "mins", _freeze(np.asarray(self.mins, dtype=np.float64)))
        object.__setattr__(self, "maxs", _freeze(np.asarray(self.maxs, dtype=np.float64)))
        object.__setattr__(self, "degenerate", _freeze(np.asarray(self.degenerate, dtype=bool)))
        if np.any(self.maxs < self.mins):
            raise ValueError("scaler max < min")

    @property
    def n_features(self) -> int:
        return len(self.mins)


def fit_minmax(matrix: np.ndarray, train_boundary: int) -> ScalerParams:
    """Fit per-feature min/max over training columns ``[:, :train_boundary]``.

    Test-period columns never influence the fit, so extremes beyond the
    training range survive scaling (they map outside [0, 1]).
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] == 0:
        raise ValueError("empty series")
    if matrix.shape[1] < 2:
        raise ValueError("series too short to fit a scaler (need T >= 2)")
    if not 1 <= train_boundary <= matrix.shape[1]:
        raise ValueError(f"train boundary {train_boundary} outside [1, {matrix.shape[1]}]")
    train = matrix[:, :train_boundary]
    mins = train.min(axis=1)
    maxs = train.max(axis=1)
    return ScalerParams(mins=mins, maxs=maxs, degenerate=mins == maxs)


def apply_scale(matrix: np.ndarray, params: ScalerParams) -> np.ndarray:
    """Scale features to ``(x - min) / (max - min)``; no clipping.

    Degenerate (constant) features map to 0.0. Accepts ``(F, T)`` matrices or
    ``(F,)`` vectors.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] != params.n_features:
        raise ValueError(f"feature count {matrix.shape[0]} != scaler's {params.n_features}")
    span = np.where(params.degenerate, 1.0, params.maxs - params.mins)
    shaped = (np.s_[:, None] if matrix.ndim == 2 else np.s_[:])
    scaled = (matrix - params.mins[shaped]) / span[shaped]
    scaled[params.degenerate] = 0.0
    return scaled


def invert_scale(scaled: np.ndarray, params: ScalerParams) -> np.ndarray:
    """Map scaled values back to original units; degenerate features return min."""
    scaled = np.asarray(scaled, dtype=np.float64)
    if scaled.shape[0] != params.n_features:
        raise ValueError(f"feature count {scaled.shape[0]} != scaler's {params.n_features}")
    span = np.where(params.degenerate, 0.0, params.maxs - params.mins)
    shaped = (np.s_[:, None] if scaled.ndim == 2 else np.s_[:])
    return scaled * span[shaped] + params.mins[shaped]


def scale_scalar(x, params: ScalerParams, row: int = STREAMFLOW_ROW):
    """Scale values of a single feature row (used for forecast targets)."""
    if params.degenerate[row]:
        return np.zeros_like(np.asarray(x, dtype=np.float64))
    return (np.asarray(x, dtype=np.float64) - params.mins[row]) / (params.maxs[row] - params.mins[row])


def invert_scalar(x, params: ScalerParams, row: int = STREAMFLOW_ROW):
    """Invert :func:`scale_scalar` for a single feature row."""
    x = np.asarray(x, dtype=np.float64)
    if params.degenerate[row]:
        return np.full_like(x, params.mins[row])
    return x * (params.maxs[row] - params.mins[row]) + params.mins[row]


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised samples produced by the sliding-window embedding.

    ``inputs`` is ``(M, N, F)``, ``targets`` ``(M, H)``. ``origin_index[m]``
    is the source-day index of sample ``m``'s first input day, so the input
    span is ``[origin, origin+N)`` and the target span ``[origin+N,
    origin+N+H)``; targets always start strictly after the inputs end.
    """

    inputs: np.ndarray
    targets: np.ndarray
    origin_index: np.ndarray
    window: int
    horizon: int
    source_length: int

    def __post_init__(self):
        object.__setattr__(self, "inputs", _freeze(np.asarray(self.inputs, dtype=np.float64)))
        object.__setattr__(self, "targets", _freeze(np.asarray(self.targets, dtype=np.float64)))
        object.__setattr__(self, "origin_index", _freeze(np.asarray(self.origin_index, dtype=np.int64)))
        m = self.inputs.shape[0]
        if self.targets.shape[0] != m or self.origin_index.shape[0] != m:
            raise ValueError("inconsistent sample counts")

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    def take(self, index) -> "WindowedDataset":
        """Subset samples by integer/boolean index, preserving metadata."""
        return WindowedDataset(
            inputs=self.inputs[index],
            targets=self.targets[index],
            origin_index=self.origin_index[index],
            window=self.window,
            horizon=self.horizon,
            source_length=self.source_length,
        )


def embed(matrix: np.ndarray, window: int, horizon: int,
          target_row: int = STREAMFLOW_ROW) -> WindowedDataset:
    """Slide an input window over a ``(F, T)`` matrix to build samples.

    Sample ``m`` takes all features over days ``[m, m+window)`` as input and
    the target row over days ``[m+window, m+window+horizon)`` as output,
    giving ``M = T - window - horizon + 1`` samples. Every emitted sample has
    a complete horizon.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("expected a (features, time) matrix")
    if window < 1 or horizon < 1:
        raise ValueError("window and horizon must be >= 1")
    n_feat, length = matrix.shape
    n_samples = length - window - horizon + 1
    if n_samples < 1:
        raise ValueError(
            f"series too short to embed: T={length} < window {window} + horizon {horizon}"
        )
    win = np.lib.stride_tricks.sliding_window_view(matrix, window, axis=1)  # (F, T-N+1, N)
    inputs = win[:, :n_samples, :].transpose(1, 2, 0)  # (M, N, F)
    tar = np.lib.stride_tricks.sliding_window_view(matrix[target_row], horizon)
    targets = tar[window:window + n_samples]
    return WindowedDataset(
        inputs=inputs,
        targets=targets,
        origin_index=np.arange(n_samples, dtype=np.int64),
        window=window,
        horizon=horizon,
        source_length=length,
    )


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/test split: the first ``train_fraction`` of days train.

    With ``test_context_overlap`` a test sample's *input* window may reach
    back into the training period; by default train and test spans are fully
    disjoint and windows straddling the boundary are dropped.
    """

    train_fraction: float = 0.6
    test_context_overlap: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")

    def boundary_index(self, length: int) -> int:
        """First day index of the test period."""
        return int(self.train_fraction * length)


def chrono_split(dataset: WindowedDataset,
                 spec: SplitSpec = SplitSpec()) -> tuple[WindowedDataset, WindowedDataset]:
    """Split samples so that no training day index reaches the test period.

    A sample trains iff its whole input+target span ends before the boundary
    day, and tests iff its span starts at/after the boundary (or, with the
    overlap toggle, iff its targets do). Samples straddling the boundary are
    dropped.
    """
    if dataset.n_samples == 0:
        raise ValueError("cannot split an empty dataset")
    boundary = spec.boundary_index(dataset.source_length)
    span = dataset.window + dataset.horizon
    origins = dataset.origin_index
    train_mask = origins + span <= boundary
    if spec.test_context_overlap:
        test_mask = origins + dataset.window >= boundary
    else:
        test_mask = origins >= boundary
    if not train_mask.any():
        raise ValueError("empty train split")
    if not test_mask.any():
        raise ValueError("empty test split")
    return dataset.take(train_mask), dataset.take(test_mask)
