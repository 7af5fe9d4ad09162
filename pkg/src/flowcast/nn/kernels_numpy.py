"""Reference numpy implementation of the LSTM cell kernels.

This is the pure-Python fallback for the compiled extension in
``_kernels.pyx``; both expose the same two functions and must implement the
same arithmetic. Gate blocks are stacked ``i | f | g | o`` along the last
axis.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_cell_forward(x, h_prev, c_prev, wx, wh, b):
    """One batched LSTM step.

    Returns ``(h, c, gates)`` where ``gates`` is the (B, 4H) matrix of
    post-activation gate values, cached for the backward pass.
    """
    hid = h_prev.shape[1]
    z = x @ wx + h_prev @ wh + b
    gates = np.empty_like(z)
    gates[:, :hid] = _sigmoid(z[:, :hid])
    gates[:, hid:2 * hid] = _sigmoid(z[:, hid:2 * hid])
    gates[:, 2 * hid:3 * hid] = np.tanh(z[:, 2 * hid:3 * hid])
    gates[:, 3 * hid:] = _sigmoid(z[:, 3 * hid:])
    c = gates[:, hid:2 * hid] * c_prev + gates[:, :hid] * gates[:, 2 * hid:3 * hid]
    h = gates[:, 3 * hid:] * np.tanh(c)
    return h, c, gates


def lstm_cell_backward(dh, dc_next, x, h_prev, c_prev, gates, c, wx, wh, dwx, dwh, db):
    """Exact gradients for one LSTM step.

    ``dh``/``dc_next`` are the gradients flowing into this step's outputs.
    Weight gradients accumulate in place into ``dwx``/``dwh``/``db``; the
    gradients w.r.t. the step inputs are returned as
    ``(dx, dh_prev, dc_prev)``.
    """
    hid = h_prev.shape[1]
    i = gates[:, :hid]
    f = gates[:, hid:2 * hid]
    g = gates[:, 2 * hid:3 * hid]
    o = gates[:, 3 * hid:]
    tc = np.tanh(c)
    dc = dc_next + dh * o * (1.0 - tc * tc)
    dz = np.empty_like(gates)
    dz[:, :hid] = dc * g * i * (1.0 - i)
    dz[:, hid:2 * hid] = dc * c_prev * f * (1.0 - f)
    dz[:, 2 * hid:3 * hid] = dc * i * (1.0 - g * g)
    dz[:, 3 * hid:] = dh * tc * o * (1.0 - o)
    dwx += x.T @ dz
    dwh += h_prev.T @ dz
    db += dz.sum(axis=0)
    dx = dz @ wx.T
    dh_prev = dz @ wh.T
    dc_prev = dc * f
    return dx, dh_prev, dc_prev
