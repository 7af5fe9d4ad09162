"""Catchment modeling strategies over an aligned region.

Four ways to use a region's stations: one model per station (individual),
one pooled model with a station indicator appended to every timestep
(batch-indicator), a pooled model with the 7 static attributes appended
instead (batch-static), and a stacked ensemble blending a pooled temporal
model with a statics-only dense model through a per-step linear regression.

All builders scale features per station on that station's training period,
so stripping the appended columns from any batch sample recovers the exact
individual-strategy sample it came from.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import RegionBundle, StationRejected
from .series import (
    ScalerParams,
    SplitSpec,
    WindowedDataset,
    apply_scale,
    chrono_split,
    embed,
    feature_matrix,
    fit_minmax,
)

STRATEGY_KINDS = ("INDIVIDUAL", "BATCH_INDICATOR", "BATCH_STATIC", "STACKED_ENSEMBLE")
INDICATOR_ENCODINGS = ("one-hot", "integer")


@dataclass(frozen=True)
class BuiltStation:
    """One station's scaled, embedded, chronologically split samples."""

    station_id: str
    train: WindowedDataset
    test: WindowedDataset
    scaler: ScalerParams


@dataclass(frozen=True)
class BatchDataset:
    """Pooled samples from every station, with per-sample station bookkeeping.

    ``train_station[k]`` indexes ``stations`` for pooled train sample ``k``
    (likewise for test), so per-station evaluation stays possible after
    pooling.
    """

    stations: tuple[str, ...]
    train: WindowedDataset
    test: WindowedDataset
    scalers: dict[str, ScalerParams]
    train_station: np.ndarray
    test_station: np.ndarray

    @property
    def n_features(self) -> int:
        return self.train.n_features

    def station_test(self, station_id: str) -> WindowedDataset:
        idx = self.stations.index(station_id)
        return self.test.take(self.test_station == idx)


def prepare_station(series, window: int, horizon: int,
                    split: SplitSpec = SplitSpec()) -> BuiltStation:
    """Scale one station on its training days, embed, and split.

    Raises :class:`StationRejected` when the record is too short to embed or
    to populate both splits.
    """
    matrix = feature_matrix(series)
    try:
        scaler = fit_minmax(matrix, split.boundary_index(matrix.shape[1]))
        dataset = embed(apply_scale(matrix, scaler), window, horizon)
        train, test = chrono_split(dataset, split)
    except ValueError as exc:
        raise StationRejected(series.station_id, str(exc)) from None
    return BuiltStation(station_id=series.station_id, train=train, test=test, scaler=scaler)


def build_individual(region: RegionBundle, window: int, horizon: int,
                     split: SplitSpec = SplitSpec()) -> tuple[list[BuiltStation], list[StationRejected]]:
    """One dataset per station (6 input features); short stations are reported."""
    built, rejected = [], []
    for series in region.stations:
        try:
            built.append(prepare_station(series, window, horizon, split))
        except StationRejected as rej:
            rejected.append(rej)
    return built, rejected


def build_batch_indicator(region: RegionBundle, window: int, horizon: int,
                          split: SplitSpec = SplitSpec(),
                          encoding: str = "one-hot") -> BatchDataset:
    """Pool all stations, appending a station identity to every timestep.

    One-hot encoding adds S columns (F = 6 + S); integer encoding adds one
    column holding the station's rank among sorted ids, scaled into [0, 1].
    """
    if encoding not in INDICATOR_ENCODINGS:
        raise ValueError(f"encoding must be one of {INDICATOR_ENCODINGS}")
    if len(region.stations) < 2:
        raise ValueError("batch strategies need at least 2 stations")
    n = len(region.stations)

    def extra_rows(idx: int, length: int) -> np.ndarray:
        if encoding == "one-hot":
            rows = np.zeros((n, length))
            rows[idx] = 1.0
        else:
            rows = np.full((1, length), idx / max(n - 1, 1))
        return rows

    return _pool(region, window, horizon, split, extra_rows)


def build_batch_static(region: RegionBundle, window: int, horizon: int,
                       split: SplitSpec = SplitSpec()) -> BatchDataset:
    """Pool all stations, appending their 7 static attributes (F = 13).

    Attributes are min-max scaled across the region's stations; an attribute
    shared by every station collapses to 0.
    """
    scaled_attrs, _ = scale_statics(region)

    def extra_rows(idx: int, length: int) -> np.ndarray:
        sid = region.stations[idx].station_id
        return np.tile(scaled_attrs[sid][:, None], (1, length))

    return _pool(region, window, horizon, split, extra_rows)


def _pool(region, window, horizon, split, extra_rows) -> BatchDataset:
    """Embed each station with extra constant feature rows, then concatenate."""
    trains, tests, scalers = [], [], {}
    train_station, test_station = [], []
    for idx, series in enumerate(region.stations):
        matrix = feature_matrix(series)
        scaler = fit_minmax(matrix, split.boundary_index(matrix.shape[1]))
        scaled = np.vstack([apply_scale(matrix, scaler), extra_rows(idx, matrix.shape[1])])
        dataset = embed(scaled, window, horizon)
        train, test = chrono_split(dataset, split)
        trains.append(train)
        tests.append(test)
        scalers[series.station_id] = scaler
        train_station.append(np.full(train.n_samples, idx))
        test_station.append(np.full(test.n_samples, idx))
    return BatchDataset(
        stations=tuple(s.station_id for s in region.stations),
        train=concat_datasets(trains), test=concat_datasets(tests), scalers=scalers,
        train_station=np.concatenate(train_station),
        test_station=np.concatenate(test_station),
    )


def concat_datasets(datasets) -> WindowedDataset:
    """Sample-wise concatenation of datasets sharing window and horizon."""
    datasets = list(datasets)
    first = datasets[0]
    return WindowedDataset(
        inputs=np.concatenate([d.inputs for d in datasets]),
        targets=np.concatenate([d.targets for d in datasets]),
        origin_index=np.concatenate([d.origin_index for d in datasets]),
        window=first.window, horizon=first.horizon, source_length=first.source_length,
    )


def scale_statics(region: RegionBundle) -> tuple[dict[str, np.ndarray], ScalerParams]:
    """Min-max scale each static attribute over the region's stations."""
    ids = region.station_ids
    missing = [sid for sid in ids if sid not in region.statics]
    if missing:
        raise ValueError(f"missing static attributes for station {missing[0]!r}")
    table = np.stack([region.statics[sid].as_vector() for sid in ids], axis=1)  # (7, S)
    mins, maxs = table.min(axis=1), table.max(axis=1)
    scaler = ScalerParams(mins=mins, maxs=maxs, degenerate=mins == maxs)
    scaled = apply_scale(table, scaler)
    return {sid: scaled[:, i] for i, sid in enumerate(ids)}, scaler


@dataclass(frozen=True)
class StaticModel:
    """Dense layer mapping the 7 scaled static attributes to H outputs."""

    weights: np.ndarray  # (7, H)
    bias: np.ndarray  # (H,)

    def predict(self, attrs: np.ndarray) -> np.ndarray:
        attrs = np.asarray(attrs, dtype=np.float64)
        return attrs @ self.weights + self.bias


def fit_static_model(attrs: np.ndarray, targets: np.ndarray,
                     ridge: float = 1e-8) -> StaticModel:
    """Least-squares fit of the statics-only model on training samples.

    ``attrs`` is (M, 7) with each sample carrying its station's attribute
    vector; a tiny ridge keeps the normal equations solvable when attributes
    are collinear (they repeat per station).
    """
    attrs = np.asarray(attrs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    design = np.hstack([attrs, np.ones((attrs.shape[0], 1))])
    coef = _ridge_solve(design, targets, ridge)  # (8, H)
    return StaticModel(weights=coef[:-1], bias=coef[-1])


@dataclass(frozen=True)
class EnsembleCombiner:
    """Per-step affine blend of temporal and static forecasts.

    Row h of ``coefficients`` holds H temporal weights, H static weights,
    and an intercept, applied to step h's output.
    """

    coefficients: np.ndarray  # (H, 2H+1)

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        object.__setattr__(self, "coefficients", coef)
        h = coef.shape[0]
        if coef.shape != (h, 2 * h + 1):
            raise ValueError(f"coefficients must be (H, 2H+1), got {coef.shape}")
        if not np.isfinite(coef).all():
            raise ValueError("non-finite combiner coefficients")

    @property
    def horizon(self) -> int:
        return self.coefficients.shape[0]


def fit_combiner(temporal_fc: np.ndarray, static_fc: np.ndarray,
                 targets: np.ndarray, ridge: float = 1e-8) -> EnsembleCombiner:
    """Regress targets on [temporal forecast, static forecast, 1] per step."""
    temporal_fc = np.asarray(temporal_fc, dtype=np.float64)
    static_fc = np.asarray(static_fc, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if not temporal_fc.shape == static_fc.shape == targets.shape:
        raise ValueError("forecast and target shapes differ")
    design = np.hstack([temporal_fc, static_fc, np.ones((targets.shape[0], 1))])
    coef = _ridge_solve(design, targets, ridge)  # (2H+1, H)
    return EnsembleCombiner(coefficients=coef.T)


def fit_stacked_ensemble(temporal_predict, static_model: StaticModel,
                         station_data, ridge: float = 1e-8) -> EnsembleCombiner:
    """Fit the blend on pooled training forecasts of both base models.

    ``temporal_predict`` maps (M, N, 6) inputs to (M, H) forecasts;
    ``station_data`` yields (train dataset, scaled 7-attribute vector) pairs.
    """
    temporal_fc, static_fc, targets = [], [], []
    for train, attrs in station_data:
        fc = temporal_predict(train.inputs)
        temporal_fc.append(fc)
        static_fc.append(static_model.predict(np.tile(attrs, (train.n_samples, 1))))
        targets.append(train.targets)
    return fit_combiner(np.concatenate(temporal_fc), np.concatenate(static_fc),
                        np.concatenate(targets), ridge)


def predict_stacked(combiner: EnsembleCombiner, temporal_fc: np.ndarray,
                    static_fc: np.ndarray) -> np.ndarray:
    """Blend forecasts; accepts one sample (H,) or a batch (M, H)."""
    temporal_fc = np.asarray(temporal_fc, dtype=np.float64)
    single = temporal_fc.ndim == 1
    temporal_fc = np.atleast_2d(temporal_fc)
    static_fc = np.atleast_2d(np.asarray(static_fc, dtype=np.float64))
    design = np.hstack([temporal_fc, static_fc, np.ones((temporal_fc.shape[0], 1))])
    out = design @ combiner.coefficients.T
    return out[0] if single else out


def _ridge_solve(design: np.ndarray, targets: np.ndarray, ridge: float) -> np.ndarray:
    gram = design.T @ design + ridge * np.eye(design.shape[1])
    return np.linalg.solve(gram, design.T @ targets)
