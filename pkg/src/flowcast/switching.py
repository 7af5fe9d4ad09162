"""Conditional forecasting ensemble switched on flow-duration rank.

A window's extremeness score alpha is the empirical non-exceedance rank of
its upcoming horizon-maximum flow on the training flow-duration curve: alpha
near 1 means a flood larger than almost every training day. A small
regressor predicts alpha from the input window alone, and the forecast is
then routed to one of three branches: a 0.95-quantile net for predicted
floods, a 0.70-quantile net for elevated flows, and a standard MSE net for
ordinary conditions. Switching is hard; the chosen branch's output is
returned untouched.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn import (
    LossSpec,
    NetParams,
    NetSpec,
    TrainConfig,
    forward,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .series import ScalerParams, WindowedDataset, invert_scalar

BRANCH_NAMES = ("hi", "mid", "lo")

#: Deterministic per-member seed offsets applied to the base training seed.
SEED_OFFSETS = {"alpha": 0, "hi": 1, "mid": 2, "lo": 3}

SWITCH_MANIFEST = "manifest.json"
SWITCH_FORMAT_VERSION = 1


@dataclass(frozen=True)
class FlowDurationCurve:
    """Sorted training-period flows; the basis of empirical rank lookups."""

    values: np.ndarray
    n: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size == 0:
            raise ValueError("flow duration curve needs at least one flow value")
        if np.any(np.diff(values) < 0):
            raise ValueError("flow duration curve values must be sorted ascending")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n", int(values.size))


def build_fdc(train_flows) -> FlowDurationCurve:
    """Sort a copy of the training flows (original units)."""
    flows = np.sort(np.asarray(train_flows, dtype=np.float64).ravel())
    return FlowDurationCurve(values=flows, n=flows.size)


def alpha_of(flow, fdc: FlowDurationCurve):
    """Fraction of training flows <= ``flow``; monotone, in [0, 1].

    Accepts a scalar or an array, returning the matching shape.
    """
    rank = np.searchsorted(fdc.values, flow, side="right") / fdc.n
    return float(rank) if np.isscalar(flow) or np.ndim(flow) == 0 else rank


def label_alpha(dataset: WindowedDataset, fdc: FlowDurationCurve,
                scaler: ScalerParams | None = None) -> np.ndarray:
    """Per-sample alpha of the horizon-maximum flow.

    Pass the station's scaler when the dataset targets are scaled; ranks are
    always taken in original units.
    """
    targets = dataset.targets
    if scaler is not None:
        targets = invert_scalar(targets, scaler)
    return alpha_of(targets.max(axis=1), fdc)


@dataclass(frozen=True)
class SwitchConfig:
    """Routing thresholds on predicted alpha and branch quantile levels.

    Degenerate threshold settings (0 or 1) are allowed for diagnostics; the
    useful range keeps 0 < mid_threshold < hi_threshold < 1.
    """

    hi_threshold: float = 0.95
    mid_threshold: float = 0.70
    hi_tau: float = 0.95
    mid_tau: float = 0.70

    def __post_init__(self):
        if not 0.0 <= self.mid_threshold <= self.hi_threshold <= 1.0:
            raise ValueError("need 0 <= mid_threshold <= hi_threshold <= 1")
        for name in ("hi_tau", "mid_tau"):
            tau = getattr(self, name)
            if not 0.0 < tau < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass(frozen=True)
class Member:
    """One trained sub-model of the ensemble."""

    spec: NetSpec
    params: NetParams


@dataclass(frozen=True)
class SwitchEnsemble:
    alpha: Member
    hi: Member
    mid: Member
    lo: Member
    fdc: FlowDurationCurve
    config: SwitchConfig
    seed: int = 0

    def __post_init__(self):
        shape = (self.alpha.spec.window, self.alpha.spec.input_features)
        for name in ("hi", "mid", "lo"):
            member = getattr(self, name)
            if (member.spec.window, member.spec.input_features) != shape:
                raise ValueError(f"branch '{name}' input shape differs from alpha model")
        if self.alpha.spec.horizon != 1:
            raise ValueError("alpha model must have horizon 1")

    def branch(self, name: str) -> Member:
        if name not in BRANCH_NAMES:
            raise KeyError(name)
        return getattr(self, name)


def choose_branch(alpha_hat: float, config: SwitchConfig) -> str:
    """Total routing rule; both thresholds themselves fall to the mid branch."""
    if alpha_hat > config.hi_threshold:
        return "hi"
    if alpha_hat >= config.mid_threshold:
        return "mid"
    return "lo"


def train_switch(train_set: WindowedDataset, fdc: FlowDurationCurve, spec: NetSpec,
                 switch_config: SwitchConfig = SwitchConfig(),
                 train_config: TrainConfig = TrainConfig(),
                 scaler: ScalerParams | None = None) -> SwitchEnsemble:
    """Train the alpha regressor and all three branches on the full train set.

    Branches differ only in loss (pinball at hi_tau / mid_tau, MSE for lo)
    and in their seed offset; the alpha regressor shares the architecture
    with horizon 1 and MSE loss on the rank labels.
    """
    alpha_labels = label_alpha(train_set, fdc, scaler)
    alpha_set = WindowedDataset(
        inputs=train_set.inputs, targets=alpha_labels[:, None],
        origin_index=train_set.origin_index, window=train_set.window,
        horizon=1, source_length=train_set.source_length,
    )
    alpha_spec = dataclasses.replace(spec, horizon=1)
    jobs = {
        "alpha": (alpha_spec, alpha_set, LossSpec(kind="MSE")),
        "hi": (spec, train_set, LossSpec(kind="PINBALL", tau=switch_config.hi_tau)),
        "mid": (spec, train_set, LossSpec(kind="PINBALL", tau=switch_config.mid_tau)),
        "lo": (spec, train_set, LossSpec(kind="MSE")),
    }
    members = {}
    for name, (job_spec, job_set, loss) in jobs.items():
        config = dataclasses.replace(train_config, seed=train_config.seed + SEED_OFFSETS[name])
        result = train(job_spec, job_set, loss, config)
        members[name] = Member(spec=job_spec, params=result.params)
    return SwitchEnsemble(fdc=fdc, config=switch_config, seed=train_config.seed, **members)


def switch_predict(ensemble: SwitchEnsemble, window: np.ndarray) -> tuple[np.ndarray, str, float]:
    """Route one (N, F) window: returns (forecast, branch name, alpha-hat).

    The forecast is the selected branch's own forward output, so it matches
    a standalone run of that branch bit for bit.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ValueError(f"expected one (window, features) input, got shape {window.shape}")
    raw = forward(ensemble.alpha.spec, ensemble.alpha.params, window[None])[0, 0]
    alpha_hat = float(np.clip(raw, 0.0, 1.0))
    name = choose_branch(alpha_hat, ensemble.config)
    member = ensemble.branch(name)
    forecast = forward(member.spec, member.params, window[None])[0]
    return forecast, name, alpha_hat


def switch_predict_batch(ensemble: SwitchEnsemble,
                         inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Route many windows, one at a time.

    Windows are deliberately not grouped into per-branch sub-batches: BLAS
    kernels pick different accumulation orders for different batch shapes,
    which would break the guarantee that every forecast is bit-identical to
    the chosen branch's own single-window forward.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    forecasts = np.empty((inputs.shape[0], ensemble.hi.spec.horizon))
    branches = np.empty(inputs.shape[0], dtype="<U5")
    alpha_hat = np.empty(inputs.shape[0])
    for m in range(inputs.shape[0]):
        forecasts[m], branches[m], alpha_hat[m] = switch_predict(
            ensemble, inputs[m])
    return forecasts, branches, alpha_hat


def save_switch(directory, ensemble: SwitchEnsemble) -> Path:
    """Write the ensemble as a directory: four checkpoints, FDC, manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in ("alpha",) + BRANCH_NAMES:
        member = getattr(ensemble, name)
        seed = ensemble.seed + SEED_OFFSETS[name]
        files[name] = save_checkpoint(directory / f"{name}.npz", member.spec,
                                      member.params, seed).name
    np.savez(directory / "fdc.npz", values=ensemble.fdc.values)
    manifest = {
        "format_version": SWITCH_FORMAT_VERSION,
        "members": files,
        "fdc": "fdc.npz",
        "config": dataclasses.asdict(ensemble.config),
        "seed": ensemble.seed,
    }
    with open(directory / SWITCH_MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return directory


def load_switch(directory) -> SwitchEnsemble:
    directory = Path(directory)
    with open(directory / SWITCH_MANIFEST) as fh:
        manifest = json.load(fh)
    if manifest["format_version"] != SWITCH_FORMAT_VERSION:
        raise ValueError(f"unsupported ensemble format {manifest['format_version']}")
    members = {}
    for name, filename in manifest["members"].items():
        spec, params, _seed = load_checkpoint(directory / filename)
        members[name] = Member(spec=spec, params=params)
    with np.load(directory / manifest["fdc"]) as data:
        fdc = FlowDurationCurve(values=data["values"], n=len(data["values"]))
    return SwitchEnsemble(fdc=fdc, config=SwitchConfig(**manifest["config"]),
                          seed=int(manifest["seed"]), **members)
