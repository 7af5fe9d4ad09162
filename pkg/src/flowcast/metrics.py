"""Forecast accuracy metrics over multi-step test windows.

RMSE is reported per horizon step and as the mean across steps. NSE
(Nash-Sutcliffe efficiency) compares squared error against the variance of
the observations. SER-i% is the RMSE restricted to windows whose observed
horizon maximum reaches the top i% of all observed test values, so small i
isolates performance on the most extreme flows.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Extremeness levels for the SER table, in percent of most-extreme windows.
SER_LEVELS = (1, 2, 5, 10, 25, 50, 75)

#: Wide-table column order: extremes first, then the whole-set metrics.
SUMMARY_METRICS = tuple(f"SER{i}" for i in SER_LEVELS) + ("RMSE", "NSE")


def rmse(pred: np.ndarray, obs: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-step RMSE over samples, plus the mean across horizon steps."""
    pred, obs = _as_matrix(pred), _as_matrix(obs)
    if pred.shape != obs.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {obs.shape}")
    if pred.shape[0] == 0:
        raise ValueError("no samples")
    steps = np.sqrt(np.mean((pred - obs) ** 2, axis=0))
    return steps, float(np.mean(steps))


def nse(pred: np.ndarray, obs: np.ndarray) -> float:
    """Nash-Sutcliffe efficiency of a single-step series, in (-inf, 1]."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    obs = np.asarray(obs, dtype=np.float64).ravel()
    if pred.shape != obs.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {obs.shape}")
    denom = float(np.sum((obs - obs.mean()) ** 2))
    if denom == 0.0:
        raise ValueError("NSE undefined for zero-variance observations")
    return 1.0 - float(np.sum((obs - pred) ** 2)) / denom


def ser(pred: np.ndarray, obs: np.ndarray, i_percent: int) -> float:
    """RMSE over the windows whose observed horizon max is in the top i%.

    The threshold is the (100 - i)th percentile of all observed test values
    (linear interpolation). A window qualifies when its observed horizon
    maximum reaches the threshold; the result is the RMSE over every element
    of the qualifying windows. NaN when no window qualifies.
    """
    if i_percent not in SER_LEVELS:
        raise ValueError(f"i_percent must be one of {SER_LEVELS}, got {i_percent}")
    pred, obs = _as_matrix(pred), _as_matrix(obs)
    if pred.shape != obs.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {obs.shape}")
    if pred.shape[0] == 0:
        raise ValueError("no samples")
    threshold = np.quantile(obs.ravel(), 1.0 - i_percent / 100.0)
    mask = obs.max(axis=1) >= threshold
    if not mask.any():
        return float("nan")
    return float(np.sqrt(np.mean((pred[mask] - obs[mask]) ** 2)))


def ser_table(pred: np.ndarray, obs: np.ndarray) -> dict[int, float]:
    return {i: ser(pred, obs, i) for i in SER_LEVELS}


@dataclass(frozen=True)
class ForecastReport:
    """All metrics of one model on one station's test windows, for one run."""

    strategy: str
    model: str
    station: str
    run: int
    space: str  # "scaled" or "original"
    predictions: np.ndarray  # (M, H)
    observations: np.ndarray  # (M, H)
    rmse_steps: np.ndarray  # (H,)
    rmse: float
    nse_steps: np.ndarray  # (H,)
    nse: float
    ser_table: dict[int, float]

    def __post_init__(self):
        if self.space not in ("scaled", "original"):
            raise ValueError(f"space must be 'scaled' or 'original', got {self.space!r}")
        horizon = self.predictions.shape[1]
        if self.observations.shape != self.predictions.shape:
            raise ValueError("predictions and observations differ in shape")
        if self.rmse_steps.shape != (horizon,) or self.nse_steps.shape != (horizon,):
            raise ValueError("per-step metric arrays must have length H")
        if tuple(self.ser_table) != SER_LEVELS:
            raise ValueError(f"SER table must cover levels {SER_LEVELS}")

    def metric_values(self) -> dict[str, float]:
        """Aggregate metrics keyed by summary-table column name."""
        out = {f"SER{i}": self.ser_table[i] for i in SER_LEVELS}
        out["RMSE"] = self.rmse
        out["NSE"] = self.nse
        return out


def evaluate_forecasts(pred: np.ndarray, obs: np.ndarray, *, strategy: str, model: str,
                       station: str, run: int = 0, space: str = "scaled") -> ForecastReport:
    """Compute every metric for one (strategy, model, station, run) cell."""
    pred, obs = _as_matrix(pred), _as_matrix(obs)
    steps, aggregate = rmse(pred, obs)
    nse_steps = np.array([nse(pred[:, h], obs[:, h]) for h in range(pred.shape[1])])
    return ForecastReport(
        strategy=strategy, model=model, station=station, run=run, space=space,
        predictions=pred, observations=obs,
        rmse_steps=steps, rmse=aggregate,
        nse_steps=nse_steps, nse=float(np.mean(nse_steps)),
        ser_table=ser_table(pred, obs),
    )


@dataclass(frozen=True)
class MetricSummary:
    """Mean and sample std of each aggregate metric across repeated runs."""

    strategy: str
    model: str
    station: str
    runs: int
    single_run: bool
    mean: dict[str, float]
    std: dict[str, float]


def summarize(reports, *, station: str | None = None) -> MetricSummary:
    """Aggregate R runs into mean +- sample std per metric.

    ``station`` overrides the label when pooling reports across stations.
    A single run gives std 0 and is flagged via ``single_run``.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to summarize")
    values = {name: np.array([r.metric_values()[name] for r in reports])
              for name in SUMMARY_METRICS}
    single = len(reports) == 1
    mean = {name: float(np.mean(v)) for name, v in values.items()}
    std = {name: 0.0 if single else float(np.std(v, ddof=1)) for name, v in values.items()}
    first = reports[0]
    return MetricSummary(
        strategy=first.strategy, model=first.model,
        station=first.station if station is None else station,
        runs=len(reports), single_run=single, mean=mean, std=std,
    )


def write_long_csv(path, reports) -> None:
    """Tidy per-run metric rows: one value per line, step-resolved where defined."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "model", "station", "run", "metric",
                         "horizon_step", "value"])
        for r in reports:
            key = [r.strategy, r.model, r.station, r.run]
            for h in range(len(r.rmse_steps)):
                writer.writerow(key + ["RMSE", h + 1, _fmt(r.rmse_steps[h])])
                writer.writerow(key + ["NSE", h + 1, _fmt(r.nse_steps[h])])
            writer.writerow(key + ["RMSE", "", _fmt(r.rmse)])
            writer.writerow(key + ["NSE", "", _fmt(r.nse)])
            for i in SER_LEVELS:
                writer.writerow(key + [f"SER{i}", "", _fmt(r.ser_table[i])])


def write_summary_csv(path, summaries) -> None:
    """Wide table, one row per summary: SER 1%..75% then RMSE then NSE."""
    header = ["strategy", "model", "station", "runs"]
    for name in SUMMARY_METRICS:
        header += [f"{name}_mean", f"{name}_std"]
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in summaries:
            row = [s.strategy, s.model, s.station, s.runs]
            for name in SUMMARY_METRICS:
                row += [_fmt(s.mean[name]), _fmt(s.std[name])]
            writer.writerow(row)


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"expected samples x steps matrix, got shape {a.shape}")
    return a


def _fmt(v) -> str:
    v = float(v)
    return "" if np.isnan(v) else repr(v)
