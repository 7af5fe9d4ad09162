"""Forward passes and exact backpropagation-through-time for the four
forecaster architectures.

All models map a ``(B, N, F)`` input batch to ``(B, H)`` predictions:

* ``LSTM``: N recurrent steps; the final hidden state feeds a dense head.
* ``BD-LSTM``: two independent cells read the window left-to-right and
  right-to-left; their final states are concatenated before the head.
* ``ED-LSTM``: an encoder consumes the window, then a decoder emits one
  output per horizon step, feeding each output back as its next input
  (no teacher forcing; the first decoder input is 0).
* ``CNN1D``: length-``k`` kernels slide over the time axis, tanh activation,
  global max-pool over positions, dense head.

``forward(..., return_cache=True)`` stores the activations needed by
``backward``, which returns the loss gradient for every parameter in the
flat layout order.
"""
from __future__ import annotations

import numpy as np

from . import backend
from .netspec import NetParams, NetSpec, zeros_like_params


def forward(spec: NetSpec, params: NetParams, inputs: np.ndarray, return_cache: bool = False):
    """Run a batch through the model; optionally keep the backward cache."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3:
        raise ValueError(f"expected (batch, window, features) inputs, got shape {inputs.shape}")
    if inputs.shape[1] != spec.window or inputs.shape[2] != spec.input_features:
        raise ValueError(
            f"input shape {inputs.shape[1:]} does not match spec "
            f"(window={spec.window}, features={spec.input_features})"
        )
    preds, cache = _FORWARD[spec.kind](spec, params, inputs)
    if return_cache:
        return preds, cache
    return preds


def backward(spec: NetSpec, params: NetParams, cache, d_pred: np.ndarray) -> np.ndarray:
    """Gradient of the scalar loss w.r.t. every parameter.

    ``cache`` must come from ``forward(..., return_cache=True)`` on the same
    spec/params; ``d_pred`` is the loss gradient w.r.t. the predictions.
    """
    if cache is None or cache.get("kind") != spec.kind:
        raise ValueError("missing or mismatched forward cache")
    d_pred = np.asarray(d_pred, dtype=np.float64)
    return _BACKWARD[spec.kind](spec, params, cache, d_pred)


# ---------------------------------------------------------------------------
# shared recurrent plumbing

def _run_cell(inputs, wx, wh, b, reverse=False):
    """Unroll one LSTM cell over the window; returns final state and step cache."""
    n_batch, n_steps = inputs.shape[0], inputs.shape[1]
    hid = wh.shape[0]
    h = np.zeros((n_batch, hid))
    c = np.zeros((n_batch, hid))
    order = range(n_steps - 1, -1, -1) if reverse else range(n_steps)
    steps = []
    for t in order:
        x_t = np.ascontiguousarray(inputs[:, t, :])
        h_new, c_new, gates = backend.lstm_cell_forward(x_t, h, c, wx, wh, b)
        steps.append((x_t, h, c, gates, c_new))
        h, c = h_new, c_new
    return h, c, steps


def _backprop_cell(steps, wx, wh, dh, dc, dwx, dwh, db):
    """BPTT through a cached cell unroll; returns (dh0, dc0)."""
    for idx in range(len(steps) - 1, -1, -1):
        x_t, h_prev, c_prev, gates, c_new = steps[idx]
        _, dh, dc = backend.lstm_cell_backward(
            dh, dc, x_t, h_prev, c_prev, gates, c_new, wx, wh, dwx, dwh, db)
    return dh, dc


# ---------------------------------------------------------------------------
# LSTM

def _lstm_forward(spec, params, inputs):
    wx, wh, b = params.view("wx"), params.view("wh"), params.view("b")
    h, c, steps = _run_cell(inputs, wx, wh, b)
    preds = h @ params.view("head_w") + params.view("head_b")
    return preds, {"kind": spec.kind, "steps": steps, "h_final": h}


def _lstm_backward(spec, params, cache, d_pred):
    grads = zeros_like_params(params)
    gp = NetParams(grads, params.layout)
    gp.view("head_w")[:] = cache["h_final"].T @ d_pred
    gp.view("head_b")[:] = d_pred.sum(axis=0)
    dh = d_pred @ params.view("head_w").T
    dc = np.zeros_like(dh)
    _backprop_cell(cache["steps"], params.view("wx"), params.view("wh"),
                   dh, dc, gp.view("wx"), gp.view("wh"), gp.view("b"))
    return grads


# ---------------------------------------------------------------------------
# BD-LSTM

def _bdlstm_forward(spec, params, inputs):
    h_f, _, steps_f = _run_cell(inputs, params.view("fwd_wx"), params.view("fwd_wh"),
                                params.view("fwd_b"))
    h_b, _, steps_b = _run_cell(inputs, params.view("bwd_wx"), params.view("bwd_wh"),
                                params.view("bwd_b"), reverse=True)
    joint = np.concatenate([h_f, h_b], axis=1)
    preds = joint @ params.view("head_w") + params.view("head_b")
    return preds, {"kind": spec.kind, "steps_f": steps_f, "steps_b": steps_b, "joint": joint}


def _bdlstm_backward(spec, params, cache, d_pred):
    hid = spec.hidden_units
    grads = zeros_like_params(params)
    gp = NetParams(grads, params.layout)
    gp.view("head_w")[:] = cache["joint"].T @ d_pred
    gp.view("head_b")[:] = d_pred.sum(axis=0)
    d_joint = d_pred @ params.view("head_w").T
    dh_f, dh_b = d_joint[:, :hid].copy(), d_joint[:, hid:].copy()
    _backprop_cell(cache["steps_f"], params.view("fwd_wx"), params.view("fwd_wh"),
                   dh_f, np.zeros_like(dh_f), gp.view("fwd_wx"), gp.view("fwd_wh"),
                   gp.view("fwd_b"))
    _backprop_cell(cache["steps_b"], params.view("bwd_wx"), params.view("bwd_wh"),
                   dh_b, np.zeros_like(dh_b), gp.view("bwd_wx"), gp.view("bwd_wh"),
                   gp.view("bwd_b"))
    return grads


# ---------------------------------------------------------------------------
# ED-LSTM

def _edlstm_forward(spec, params, inputs):
    n_batch = inputs.shape[0]
    h, c, enc_steps = _run_cell(inputs, params.view("enc_wx"), params.view("enc_wh"),
                                params.view("enc_b"))
    dec_wx, dec_wh, dec_b = params.view("dec_wx"), params.view("dec_wh"), params.view("dec_b")
    head_w, head_b = params.view("head_w"), params.view("head_b")
    y = np.zeros((n_batch, 1))
    dec_steps = []
    outputs = []
    for _ in range(spec.horizon):
        h_new, c_new, gates = backend.lstm_cell_forward(y, h, c, dec_wx, dec_wh, dec_b)
        dec_steps.append((y, h, c, gates, c_new, h_new))
        h, c = h_new, c_new
        y = h @ head_w + head_b
        outputs.append(y)
    preds = np.concatenate(outputs, axis=1)
    return preds, {"kind": spec.kind, "enc_steps": enc_steps, "dec_steps": dec_steps}


def _edlstm_backward(spec, params, cache, d_pred):
    grads = zeros_like_params(params)
    gp = NetParams(grads, params.layout)
    head_w = params.view("head_w")
    dec_wx, dec_wh = params.view("dec_wx"), params.view("dec_wh")
    dh_next = np.zeros((d_pred.shape[0], spec.hidden_units))
    dc_next = np.zeros_like(dh_next)
    dy_carry = np.zeros((d_pred.shape[0], 1))
    for t in range(spec.horizon - 1, -1, -1):
        x_dec, h_prev, c_prev, gates, c_new, h_new = cache["dec_steps"][t]
        dy = d_pred[:, t:t + 1] + dy_carry  # output + feedback-into-next-step paths
        gp.view("head_w")[:] += h_new.T @ dy
        gp.view("head_b")[:] += dy.sum(axis=0)
        dh = dy @ head_w.T + dh_next
        dy_carry, dh_next, dc_next = backend.lstm_cell_backward(
            dh, dc_next, x_dec, h_prev, c_prev, gates, c_new,
            dec_wx, dec_wh, gp.view("dec_wx"), gp.view("dec_wh"), gp.view("dec_b"))
    # dy_carry now holds the gradient w.r.t. the constant initial input; discard.
    _backprop_cell(cache["enc_steps"], params.view("enc_wx"), params.view("enc_wh"),
                   dh_next, dc_next, gp.view("enc_wx"), gp.view("enc_wh"), gp.view("enc_b"))
    return grads


# ---------------------------------------------------------------------------
# CNN1D

def _cnn_forward(spec, params, inputs):
    k = spec.conv_kernel
    n_batch = inputs.shape[0]
    n_pos = spec.window - k + 1
    # (B, P, k, F) windows flattened time-major to match the (k*F, filters) kernel
    cols = np.lib.stride_tricks.sliding_window_view(inputs, k, axis=1)
    cols = np.ascontiguousarray(cols.transpose(0, 1, 3, 2)).reshape(n_batch, n_pos, k * spec.input_features)
    z = cols @ params.view("conv_w") + params.view("conv_b")
    act = np.tanh(z)
    arg = act.argmax(axis=1)  # first max wins on ties
    pooled = np.take_along_axis(act, arg[:, None, :], axis=1)[:, 0, :]
    preds = pooled @ params.view("head_w") + params.view("head_b")
    return preds, {"kind": spec.kind, "cols": cols, "act": act, "arg": arg, "pooled": pooled}


def _cnn_backward(spec, params, cache, d_pred):
    grads = zeros_like_params(params)
    gp = NetParams(grads, params.layout)
    cols, act, arg, pooled = cache["cols"], cache["act"], cache["arg"], cache["pooled"]
    gp.view("head_w")[:] = pooled.T @ d_pred
    gp.view("head_b")[:] = d_pred.sum(axis=0)
    d_pooled = d_pred @ params.view("head_w").T
    d_act = np.zeros_like(act)
    np.put_along_axis(d_act, arg[:, None, :], d_pooled[:, None, :], axis=1)
    dz = d_act * (1.0 - act * act)
    n_batch, n_pos, width = cols.shape
    gp.view("conv_w")[:] = cols.reshape(-1, width).T @ dz.reshape(-1, dz.shape[2])
    gp.view("conv_b")[:] = dz.sum(axis=(0, 1))
    return grads


_FORWARD = {
    "LSTM": _lstm_forward,
    "BD-LSTM": _bdlstm_forward,
    "ED-LSTM": _edlstm_forward,
    "CNN1D": _cnn_forward,
}

_BACKWARD = {
    "LSTM": _lstm_backward,
    "BD-LSTM": _bdlstm_backward,
    "ED-LSTM": _edlstm_backward,
    "CNN1D": _cnn_backward,
}
