"""Architecture descriptions, flat parameter storage, and initialization.

Every forecaster is single-layered: a recurrent (or convolutional) core whose
final state feeds a dense output head. Parameters live in one flat float64
vector; the layout maps named tensors to slices of it, covering the vector
exactly once. LSTM gate blocks are stacked in the order ``i | f | g | o``
(input, forget, cell candidate, output) along the 4H axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MODEL_KINDS = ("LSTM", "BD-LSTM", "ED-LSTM", "CNN1D")

#: Default hidden sizes: 20 cells for the recurrent cores, 64 filters for CNN1D.
DEFAULT_HIDDEN = {"LSTM": 20, "BD-LSTM": 20, "ED-LSTM": 20, "CNN1D": 64}


@dataclass(frozen=True)
class NetSpec:
    """Shape description of one forecaster.

    ``hidden_units`` is the cell count for the LSTM variants and the filter
    count for CNN1D. ``conv_kernel`` (CNN1D only) is the receptive-field
    length along the time axis.
    """

    kind: str
    input_features: int
    window: int
    horizon: int
    hidden_units: int = 20
    conv_kernel: int = 3

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.input_features < 1 or self.window < 1 or self.horizon < 1:
            raise ValueError("input_features, window and horizon must be >= 1")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if self.kind == "CNN1D":
            if self.conv_kernel < 1:
                raise ValueError("conv_kernel must be >= 1")
            if self.window < self.conv_kernel:
                raise ValueError(
                    f"window {self.window} shorter than conv kernel {self.conv_kernel}"
                )


@dataclass(frozen=True)
class LayoutEntry:
    name: str
    offset: int
    shape: tuple[int, ...]
    fan_in: int
    #: slice of a bias tensor holding LSTM forget-gate biases, if any
    forget_slice: tuple[int, int] | None = None

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def param_layout(spec: NetSpec) -> tuple[LayoutEntry, ...]:
    """Enumerate the named tensors of ``spec`` in storage order."""
    f, hid, out = spec.input_features, spec.hidden_units, spec.horizon
    entries: list[tuple] = []
    if spec.kind == "LSTM":
        entries += _cell_entries("", f, hid)
        entries += [("head_w", (hid, out), hid), ("head_b", (out,), hid)]
    elif spec.kind == "BD-LSTM":
        entries += _cell_entries("fwd_", f, hid)
        entries += _cell_entries("bwd_", f, hid)
        entries += [("head_w", (2 * hid, out), 2 * hid), ("head_b", (out,), 2 * hid)]
    elif spec.kind == "ED-LSTM":
        entries += _cell_entries("enc_", f, hid)
        entries += _cell_entries("dec_", 1, hid)
        entries += [("head_w", (hid, 1), hid), ("head_b", (1,), hid)]
    elif spec.kind == "CNN1D":
        cols = spec.conv_kernel * f
        entries += [("conv_w", (cols, hid), cols), ("conv_b", (hid,), cols)]
        entries += [("head_w", (hid, out), hid), ("head_b", (out,), hid)]
    layout = []
    offset = 0
    for name, shape, fan_in in entries:
        forget = (hid, 2 * hid) if name in _LSTM_BIAS_NAMES else None
        entry = LayoutEntry(name=name, offset=offset, shape=shape, fan_in=fan_in,
                            forget_slice=forget)
        layout.append(entry)
        offset += entry.size
    return tuple(layout)


_LSTM_BIAS_NAMES = {"b", "fwd_b", "bwd_b", "enc_b", "dec_b"}


def _cell_entries(prefix: str, in_features: int, hid: int) -> list[tuple]:
    return [
        (prefix + "wx", (in_features, 4 * hid), in_features),
        (prefix + "wh", (hid, 4 * hid), hid),
        (prefix + "b", (4 * hid,), in_features + hid),
    ]


def param_count(spec: NetSpec) -> int:
    """Closed-form parameter count (checked against layout enumeration in tests)."""
    f, hid, out = spec.input_features, spec.hidden_units, spec.horizon
    cell = lambda nin: 4 * hid * (nin + hid + 1)
    if spec.kind == "LSTM":
        return cell(f) + hid * out + out
    if spec.kind == "BD-LSTM":
        return 2 * cell(f) + 2 * hid * out + out
    if spec.kind == "ED-LSTM":
        return cell(f) + cell(1) + hid + 1
    if spec.kind == "CNN1D":
        cols = spec.conv_kernel * f
        return cols * hid + hid + hid * out + out
    raise ValueError(spec.kind)


@dataclass
class NetParams:
    """Flat parameter vector plus the layout that names its slices."""

    flat: np.ndarray
    layout: tuple[LayoutEntry, ...]

    def view(self, name: str) -> np.ndarray:
        """Reshaped view of one named tensor (shares memory with ``flat``)."""
        entry = self._entry(name)
        return self.flat[entry.offset:entry.offset + entry.size].reshape(entry.shape)

    def _entry(self, name: str) -> LayoutEntry:
        for entry in self.layout:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def copy(self) -> "NetParams":
        return NetParams(flat=self.flat.copy(), layout=self.layout)

    @property
    def size(self) -> int:
        return self.flat.size


def init_params(spec: NetSpec, seed) -> NetParams:
    """Draw parameters uniform in ``+-1/sqrt(fan_in)`` per tensor.

    Forget-gate biases are then set to 1.0 so the recurrent cells start with
    open memory. Deterministic for a fixed integer seed; a Generator may be
    passed instead to share an RNG stream.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layout = param_layout(spec)
    total = layout[-1].offset + layout[-1].size
    flat = np.empty(total, dtype=np.float64)
    for entry in layout:
        limit = 1.0 / math.sqrt(entry.fan_in)
        flat[entry.offset:entry.offset + entry.size] = rng.uniform(-limit, limit, entry.size)
        if entry.forget_slice is not None:
            lo, hi = entry.forget_slice
            flat[entry.offset + lo:entry.offset + hi] = 1.0
    return NetParams(flat=flat, layout=layout)


def zeros_like_params(params: NetParams) -> np.ndarray:
    return np.zeros_like(params.flat)
