"""Per-station CSV ingestion: parsing, date alignment, and gap handling.

One time-series CSV per station (header ``date,precip_mm,tmin_c,tmax_c,
streamflow``, empty cell = missing, streamflow in mm/day) plus one static
attribute table for the region. Stations are truncated to their common date
range; stations whose streamflow record is too gappy are rejected with a
machine-readable reason rather than silently patched.
"""
from __future__ import annotations

import csv
import datetime as _dt
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .series import CatchmentSeries

TIMESERIES_COLUMNS = ("date", "precip_mm", "tmin_c", "tmax_c", "streamflow")

#: The seven per-station summary attributes, in on-disk column order.
ATTRIBUTE_NAMES = (
    "mean_streamflow",
    "streamflow_rainfall_sensitivity",
    "runoff_ratio",
    "high_flow_freq",
    "high_flow_duration",
    "low_flow_freq",
    "zero_flow_freq",
)


@dataclass(frozen=True)
class StaticAttributes:
    """Summary attributes of one catchment (flow stats in mm/day terms)."""

    station_id: str
    mean_streamflow: float
    streamflow_rainfall_sensitivity: float
    runoff_ratio: float
    high_flow_freq: float
    high_flow_duration: float
    low_flow_freq: float
    zero_flow_freq: float

    def __post_init__(self):
        for name in ("high_flow_freq", "high_flow_duration", "low_flow_freq",
                     "zero_flow_freq"):
            if getattr(self, name) < 0:
                raise ValueError(f"station {self.station_id}: {name} must be >= 0")

    def as_vector(self) -> np.ndarray:
        """The 7 attribute values in :data:`ATTRIBUTE_NAMES` order."""
        return np.array([getattr(self, name) for name in ATTRIBUTE_NAMES], dtype=np.float64)


class StationRejected(Exception):
    """A station failed the missing-data policy; ``reason`` is stable text."""

    def __init__(self, station_id: str, reason: str):
        self.station_id = station_id
        self.reason = reason
        super().__init__(f"station {station_id}: {reason}")


@dataclass(frozen=True)
class FillPolicy:
    """Gap policy: interpolate short streamflow gaps, reject gappy stations."""

    max_flow_gap_days: int = 7
    max_flow_gap_fraction: float = 0.05

    def __post_init__(self):
        if self.max_flow_gap_days < 0:
            raise ValueError("max_flow_gap_days must be >= 0")
        if not 0.0 <= self.max_flow_gap_fraction <= 1.0:
            raise ValueError("max_flow_gap_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class RegionBundle:
    """Stations of one region truncated to their common date range."""

    region_id: str
    stations: tuple[CatchmentSeries, ...]
    statics: dict[str, StaticAttributes]
    common_start: np.datetime64
    common_end: np.datetime64

    def __post_init__(self):
        if not self.stations:
            raise ValueError("bundle has no stations")
        first = self.stations[0].dates
        for s in self.stations:
            if len(s.dates) != len(first) or s.dates[0] != self.common_start \
                    or s.dates[-1] != self.common_end:
                raise ValueError(f"station {s.station_id} not aligned to common range")
        if self.statics:
            missing = [s.station_id for s in self.stations if s.station_id not in self.statics]
            if missing:
                raise ValueError(f"no static attributes for stations: {missing}")

    @property
    def station_ids(self) -> tuple[str, ...]:
        return tuple(s.station_id for s in self.stations)


def load_timeseries_csv(path, station_id: str | None = None) -> CatchmentSeries:
    """Parse one station's daily CSV; the file stem names the station.

    Rows may arrive unsorted; output dates are ascending and reindexed to a
    gap-free daily axis, with absent days and empty cells left as NaN.
    """
    path = Path(path)
    if station_id is None:
        station_id = path.stem
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        missing = [c for c in TIMESERIES_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: missing column {missing[0]!r}")
        cols = {c: header.index(c) for c in TIMESERIES_COLUMNS}
        rows: dict[_dt.date, tuple] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                day = _dt.date.fromisoformat(row[cols["date"]].strip())
                values = tuple(_cell(row[cols[c]]) for c in TIMESERIES_COLUMNS[1:])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            flow = values[-1]
            if not np.isnan(flow) and flow < 0:
                raise ValueError(f"{path}: line {lineno}: negative streamflow {flow}")
            if day in rows:
                raise ValueError(f"{path}: duplicate date {day.isoformat()}")
            rows[day] = values
    if not rows:
        raise ValueError(f"{path}: no data rows")
    start, end = min(rows), max(rows)
    dates = np.arange(start, end + _dt.timedelta(days=1), dtype="datetime64[D]")
    data = np.full((4, len(dates)), np.nan)
    for day, values in rows.items():
        data[:, (day - start).days] = values
    series = CatchmentSeries(station_id=station_id, dates=dates, precip=data[0],
                             tmin=data[1], tmax=data[2], streamflow=data[3])
    series.validate(allow_missing=True)
    return series


def _cell(text: str) -> float:
    text = text.strip()
    return float("nan") if text == "" else float(text)


def load_static_csv(path) -> dict[str, StaticAttributes]:
    """Parse the region's static-attribute table into a per-station map."""
    path = Path(path)
    required = ("station_id",) + ATTRIBUTE_NAMES
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
        extras = [c for c in header if c not in required]
        if extras:
            warnings.warn(f"{path}: ignoring {len(extras)} extra column(s): {extras}")
        out: dict[str, StaticAttributes] = {}
        for lineno, row in enumerate(reader, start=2):
            sid = row["station_id"].strip()
            if sid in out:
                raise ValueError(f"{path}: duplicate station_id {sid!r}")
            try:
                out[sid] = StaticAttributes(
                    station_id=sid,
                    **{name: float(row[name]) for name in ATTRIBUTE_NAMES},
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return out


def fill_missing(series: CatchmentSeries, policy: FillPolicy = FillPolicy()) -> CatchmentSeries:
    """Apply the gap policy; raises :class:`StationRejected` when it fails.

    Forcings are forward-filled (leading gaps backfilled). Streamflow gaps are
    rejected when their total fraction or any single run is too long;
    surviving interior gaps are linearly interpolated and boundary gaps take
    the nearest observed value.
    """
    flow = series.streamflow
    missing = np.isnan(flow)
    if missing.all():
        raise StationRejected(series.station_id, "no streamflow observations")
    fraction = float(missing.mean())
    if fraction > policy.max_flow_gap_fraction:
        raise StationRejected(
            series.station_id,
            f"streamflow gap fraction {fraction:.4f} exceeds {policy.max_flow_gap_fraction}",
        )
    longest = _longest_run(missing)
    if longest > policy.max_flow_gap_days:
        raise StationRejected(
            series.station_id,
            f"streamflow gap of {longest} days exceeds {policy.max_flow_gap_days}",
        )
    idx = np.arange(len(flow))
    filled_flow = flow.copy()
    if missing.any():
        filled_flow[missing] = np.interp(idx[missing], idx[~missing], flow[~missing])
    forcings = {}
    for name in ("precip", "tmin", "tmax"):
        col = getattr(series, name)
        if np.isnan(col).all():
            raise StationRejected(series.station_id, f"forcing '{name}' entirely missing")
        forcings[name] = _ffill(col)
    out = CatchmentSeries(station_id=series.station_id, dates=series.dates,
                          streamflow=filled_flow, **forcings)
    out.validate()
    return out


def _longest_run(mask: np.ndarray) -> int:
    longest = run = 0
    for flag in mask:
        run = run + 1 if flag else 0
        longest = max(longest, run)
    return longest


def _ffill(col: np.ndarray) -> np.ndarray:
    present = ~np.isnan(col)
    # carry the last observed value forward; backfill anything before the first
    last_seen = np.maximum.accumulate(np.where(present, np.arange(len(col)), -1))
    out = col[np.maximum(last_seen, 0)]
    first = int(np.argmax(present))
    out[:first] = col[first]
    return out


def align_common(stations, statics: dict[str, StaticAttributes] | None = None,
                 region_id: str = "") -> RegionBundle:
    """Truncate stations to [latest start, earliest end], sorted by id."""
    stations = sorted(stations, key=lambda s: s.station_id)
    if not stations:
        raise ValueError("no stations to align")
    start = max(s.dates[0] for s in stations)
    end = min(s.dates[-1] for s in stations)
    if start > end:
        raise ValueError("no common date range across stations")
    aligned = []
    for s in stations:
        lo = int((start - s.dates[0]).astype(int))
        hi = lo + int((end - start).astype(int)) + 1
        aligned.append(s.slice(lo, hi))
    statics = dict(statics or {})
    keep = {s.station_id for s in aligned}
    statics = {sid: attrs for sid, attrs in statics.items() if sid in keep}
    return RegionBundle(region_id=region_id, stations=tuple(aligned), statics=statics,
                        common_start=start, common_end=end)


def load_region(timeseries, static_csv=None, *, region_id: str = "",
                policy: FillPolicy = FillPolicy()) -> tuple[RegionBundle, list[StationRejected]]:
    """Full ingestion: load, gap-fill, check statics, align.

    ``timeseries`` is a directory of per-station CSVs or an iterable of file
    paths. Returns the aligned bundle plus the stations rejected on the way;
    raises if nothing survives.
    """
    timeseries = Path(timeseries) if isinstance(timeseries, (str, Path)) else timeseries
    if isinstance(timeseries, Path):
        paths = sorted(timeseries.glob("*.csv"))
        if static_csv is not None:
            static_path = Path(static_csv).resolve()
            paths = [p for p in paths if p.resolve() != static_path]
    else:
        paths = [Path(p) for p in timeseries]
    if not paths:
        raise ValueError("no time-series files found")
    statics = load_static_csv(static_csv) if static_csv is not None else {}
    rejected: list[StationRejected] = []
    survivors = []
    for path in paths:
        series = load_timeseries_csv(path)
        try:
            filled = fill_missing(series, policy)
        except StationRejected as rej:
            rejected.append(rej)
            continue
        if statics and filled.station_id not in statics:
            rejected.append(StationRejected(filled.station_id, "missing static attributes"))
            continue
        survivors.append(filled)
    if not survivors:
        raise ValueError(f"all {len(paths)} stations rejected")
    return align_common(survivors, statics, region_id), rejected


def write_rejection_report(path, rejections) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "reason"])
        for rej in rejections:
            writer.writerow([rej.station_id, rej.reason])
