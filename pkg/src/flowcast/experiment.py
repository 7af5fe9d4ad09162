"""Config-driven experiment runner.

A JSON config names a data source (per-station CSV files or the synthetic
generator), one catchment strategy, one or more model kinds, and the run
count; ``run`` trains everything, evaluates on the chronological test split,
and writes a summary table, tidy per-run metrics, per-station forecast
traces, and a manifest. Outputs are byte-identical for identical configs;
an output directory is complete only once ``manifest.json`` exists.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ingest import StationRejected, align_common, load_region, write_rejection_report
from .metrics import evaluate_forecasts, summarize, write_long_csv, write_summary_csv
from .nn import (
    BACKEND_NAME,
    DEFAULT_HIDDEN,
    LossSpec,
    MODEL_KINDS,
    NetSpec,
    TrainConfig,
    forward,
    train,
)
from .series import SplitSpec, invert_scalar
from .strategies import (
    STRATEGY_KINDS,
    build_batch_indicator,
    build_batch_static,
    build_individual,
    concat_datasets,
    fit_stacked_ensemble,
    fit_static_model,
    predict_stacked,
    scale_statics,
)
from .switching import SwitchConfig, build_fdc, switch_predict_batch, train_switch
from .synthetic import SynthSpec, generate_region

#: The switching ensemble rides on the individual strategy as an extra "model".
SWITCH_MODEL = "QUANTILE_SWITCH"
ALL_MODEL_KINDS = MODEL_KINDS + (SWITCH_MODEL,)

#: Seed stride between repeat runs (sub-model offsets stay well clear of it).
RUN_SEED_STRIDE = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description; nested blocks stay as plain dicts so
    ``validate`` can report their problems instead of failing to parse."""

    strategy: str = "INDIVIDUAL"
    models: tuple[str, ...] = ("LSTM",)
    window: int = 5
    horizon: int = 5
    runs: int = 5
    seed: int = 0
    hidden_units: int | None = None
    indicator_encoding: str = "one-hot"
    metric_space: str = "scaled"
    out_dir: str = "results"
    timeseries: str | None = None
    static_csv: str | None = None
    region_id: str = ""
    stations: tuple[str, ...] | None = None
    synth: dict | None = None
    split: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    switch: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.window < 1 or self.horizon < 1:
            raise ValueError("window and horizon must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        raw = dict(raw)
        if isinstance(raw.get("models"), str):
            raw["models"] = (raw["models"],)
        for key in ("models", "stations"):
            if isinstance(raw.get(key), list):
                raw[key] = tuple(raw[key])
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(Path(path)) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()


def validate(config: ExperimentConfig) -> list[str]:
    """Static checks; an empty list means ``run`` will accept the config."""
    diags = []
    if config.strategy not in STRATEGY_KINDS:
        diags.append(f"unknown strategy {config.strategy!r}; expected one of {STRATEGY_KINDS}")
    for model in config.models:
        if model not in ALL_MODEL_KINDS:
            diags.append(f"unknown model {model!r}; expected one of {ALL_MODEL_KINDS}")
    if SWITCH_MODEL in config.models and config.strategy != "INDIVIDUAL":
        diags.append(f"{SWITCH_MODEL} runs only under the INDIVIDUAL strategy")
    if config.synth is None and config.timeseries is None:
        diags.append("config needs a data source: 'timeseries' or 'synth'")
    if config.synth is not None and config.timeseries is not None:
        diags.append("'timeseries' and 'synth' are mutually exclusive")
    if config.timeseries is not None and not Path(config.timeseries).exists():
        diags.append(f"timeseries path does not exist: {config.timeseries}")
    if config.static_csv is not None and not Path(config.static_csv).is_file():
        diags.append(f"static_csv does not exist: {config.static_csv}")
    needs_statics = config.strategy in ("BATCH_STATIC", "STACKED_ENSEMBLE")
    if needs_statics and config.synth is None and config.static_csv is None:
        diags.append(f"strategy {config.strategy} needs 'static_csv'")
    if config.indicator_encoding not in ("one-hot", "integer"):
        diags.append(f"indicator_encoding must be 'one-hot' or 'integer'")
    if config.metric_space not in ("scaled", "original"):
        diags.append("metric_space must be 'scaled' or 'original'")
    if config.hidden_units is not None and config.hidden_units < 1:
        diags.append("hidden_units must be >= 1")
    for name, build in (
        ("split", lambda d: SplitSpec(**d)),
        ("train", lambda d: TrainConfig(**{**d, "seed": 0})),
        ("switch", lambda d: SwitchConfig(**d)),
    ):
        try:
            build(getattr(config, name))
        except (TypeError, ValueError) as exc:
            diags.append(f"bad '{name}' block: {exc}")
    if config.synth is not None:
        synth = dict(config.synth)
        n = synth.pop("stations", 1)
        if not isinstance(n, int) or n < 1:
            diags.append("synth.stations must be a positive integer")
        try:
            SynthSpec(**synth)
        except (TypeError, ValueError) as exc:
            diags.append(f"bad 'synth' block: {exc}")
    return diags


def load_bundle(config: ExperimentConfig):
    """Materialize the region from files or the generator."""
    if config.synth is not None:
        synth = dict(config.synth)
        n = synth.pop("stations", 1)
        stations, statics = generate_region(SynthSpec(**synth), n)
        bundle = align_common(stations, {a.station_id: a for a in statics},
                              region_id=config.region_id or "SYNTH")
        rejections: list[StationRejected] = []
    else:
        bundle, rejections = load_region(config.timeseries, config.static_csv,
                                         region_id=config.region_id)
    if config.stations:
        keep = [s for s in bundle.stations if s.station_id in config.stations]
        missing = set(config.stations) - {s.station_id for s in keep}
        if missing:
            raise ValueError(f"stations not in region: {sorted(missing)}")
        bundle = align_common(keep, bundle.statics, bundle.region_id)
    return bundle, rejections


def run(config: ExperimentConfig) -> Path:
    """Train, evaluate, and write all outputs; returns the output directory."""
    diags = validate(config)
    if diags:
        raise ValueError("invalid config: " + "; ".join(diags))
    bundle, rejections = load_bundle(config)
    split = SplitSpec(**config.split)
    switch_config = SwitchConfig(**config.switch)

    reports, traces = [], {}
    for model in config.models:
        for r in range(config.runs):
            train_config = TrainConfig(**{**config.train,
                                          "seed": config.seed + RUN_SEED_STRIDE * r})
            cell = _run_cell_jobs(config, bundle, split, switch_config, model,
                                  r, train_config)
            for report, trace_rows in cell:
                reports.append(report)
                if r == 0:
                    traces[(report.strategy, report.model, report.station)] = trace_rows

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_long_csv(out / "metrics_long.csv", reports)
    write_summary_csv(out / "summary.csv", _summaries(config, reports))
    for (strategy, model, station), rows in traces.items():
        _write_trace(out / f"trace_{strategy}_{model}_{station}.csv", rows)
    if rejections:
        write_rejection_report(out / "rejections.csv", rejections)
    manifest = {
        "config": config.to_dict(),
        "config_sha256": config.digest(),
        "backend": BACKEND_NAME,
        "versions": {
            "flowcast": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "stations": list(bundle.station_ids),
        "rejected": [[rej.station_id, rej.reason] for rej in rejections],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return out


def _summaries(config, reports):
    """Per-station rows then an ALL row, per (strategy, model), config order."""
    out = []
    keys = []
    for report in reports:
        key = (report.strategy, report.model)
        if key not in keys:
            keys.append(key)
    for strategy, model in keys:
        cell = [r for r in reports if (r.strategy, r.model) == (strategy, model)]
        for station in sorted({r.station for r in cell}):
            out.append(summarize([r for r in cell if r.station == station]))
        out.append(summarize(cell, station="ALL"))
    return out


def _net_spec(model: str, n_features: int, config: ExperimentConfig) -> NetSpec:
    kind = "LSTM" if model == SWITCH_MODEL else model
    hidden = config.hidden_units or DEFAULT_HIDDEN[kind]
    return NetSpec(kind=kind, input_features=n_features, window=config.window,
                   horizon=config.horizon, hidden_units=hidden)


def _run_cell_jobs(config, bundle, split, switch_config, model, run_idx, train_config):
    """Train and evaluate one (model, run) cell; yields (report, trace rows)."""
    strategy = config.strategy
    series_by_id = {s.station_id: s for s in bundle.stations}

    def finish(station_id, test, pred, scaler, extra=None):
        obs = test.targets
        if config.metric_space == "original":
            pred_m, obs_m = invert_scalar(pred, scaler), invert_scalar(obs, scaler)
        else:
            pred_m, obs_m = pred, obs
        report = evaluate_forecasts(pred_m, obs_m, strategy=strategy, model=model,
                                    station=station_id, run=run_idx,
                                    space=config.metric_space)
        return report, _trace_rows(series_by_id[station_id], test.origin_index,
                                   config.window, pred, obs, scaler, extra)

    if strategy == "INDIVIDUAL":
        built, rejected = build_individual(bundle, config.window, config.horizon, split)
        if rejected:
            raise rejected[0]
        for bs in built:
            if model == SWITCH_MODEL:
                series = series_by_id[bs.station_id]
                boundary = split.boundary_index(len(series))
                fdc = build_fdc(series.streamflow[:boundary])
                spec = _net_spec(model, 6, config)
                ensemble = train_switch(bs.train, fdc, spec, switch_config,
                                        train_config, scaler=bs.scaler)
                pred, branches, alphas = switch_predict_batch(ensemble, bs.test.inputs)
                extra = list(zip(alphas, branches))
            else:
                spec = _net_spec(model, 6, config)
                result = train(spec, bs.train, LossSpec(kind="MSE"), train_config)
                pred = forward(spec, result.params, bs.test.inputs)
                extra = None
            yield finish(bs.station_id, bs.test, pred, bs.scaler, extra)

    elif strategy in ("BATCH_INDICATOR", "BATCH_STATIC"):
        if strategy == "BATCH_INDICATOR":
            batch = build_batch_indicator(bundle, config.window, config.horizon,
                                          split, config.indicator_encoding)
        else:
            batch = build_batch_static(bundle, config.window, config.horizon, split)
        spec = _net_spec(model, batch.n_features, config)
        result = train(spec, batch.train, LossSpec(kind="MSE"), train_config)
        for sid in batch.stations:
            test = batch.station_test(sid)
            pred = forward(spec, result.params, test.inputs)
            yield finish(sid, test, pred, batch.scalers[sid])

    elif strategy == "STACKED_ENSEMBLE":
        built, rejected = build_individual(bundle, config.window, config.horizon, split)
        if rejected:
            raise rejected[0]
        scaled_attrs, _ = scale_statics(bundle)
        pooled = concat_datasets([bs.train for bs in built])
        spec = _net_spec(model, 6, config)
        result = train(spec, pooled, LossSpec(kind="MSE"), train_config)
        temporal = lambda x: forward(spec, result.params, x)
        attr_rows = np.concatenate([
            np.tile(scaled_attrs[bs.station_id], (bs.train.n_samples, 1))
            for bs in built
        ])
        static_model = fit_static_model(attr_rows, pooled.targets)
        combiner = fit_stacked_ensemble(
            temporal, static_model,
            [(bs.train, scaled_attrs[bs.station_id]) for bs in built])
        for bs in built:
            attrs = scaled_attrs[bs.station_id]
            t_fc = temporal(bs.test.inputs)
            s_fc = static_model.predict(np.tile(attrs, (bs.test.n_samples, 1)))
            pred = predict_stacked(combiner, t_fc, s_fc)
            yield finish(bs.station_id, bs.test, pred, bs.scaler)

    else:
        raise ValueError(f"unknown strategy {strategy!r}")


def _trace_rows(series, origins, window, pred, obs, scaler, extra):
    """Original-unit rows: date, observed day-1 flow, H predictions, routing."""
    pred_orig = invert_scalar(pred, scaler)
    obs_orig = invert_scalar(obs, scaler)
    rows = []
    for m in range(pred.shape[0]):
        # sample m's forecast covers days starting at its origin + window
        date = series.dates[origins[m] + window]
        row = [str(date), repr(float(obs_orig[m, 0]))]
        row += [repr(float(v)) for v in pred_orig[m]]
        if extra is not None:
            alpha, branch = extra[m]
            row += [repr(float(alpha)), branch]
        else:
            row += ["", ""]
        rows.append(row)
    return rows


def _write_trace(path, rows) -> None:
    horizon = len(rows[0]) - 4 if rows else 0
    header = ["date", "observed"] + [f"predicted_h{h+1}" for h in range(horizon)]
    header += ["alpha_hat", "branch"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
