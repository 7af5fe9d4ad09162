# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled LSTM cell kernels (the training hot path).

Numerically mirrors ``kernels_numpy``; the backend module picks whichever is
importable. Gate blocks are stacked ``i | f | g | o``. Weight matrices must
be C-contiguous (parameter views always are); inner loops run along their
rows so the compiler can vectorize them.
"""
import numpy as np

from libc.math cimport exp, tanh

BACKEND_NAME = "compiled"


cdef inline double _sig(double z) noexcept nogil:
    return 1.0 / (1.0 + exp(-z))


def lstm_cell_forward(const double[:, :] x, const double[:, :] h_prev,
                      const double[:, :] c_prev, const double[:, ::1] wx,
                      const double[:, ::1] wh, const double[:] b):
    """One batched LSTM step; returns (h, c, gates) like the numpy twin."""
    cdef Py_ssize_t B = x.shape[0], F = x.shape[1], H = h_prev.shape[1]
    cdef Py_ssize_t G = 4 * H
    h_arr = np.empty((B, H))
    c_arr = np.empty((B, H))
    g_arr = np.empty((B, G))
    cdef double[:, ::1] h = h_arr, c = c_arr, gates = g_arr
    cdef Py_ssize_t bi, j, k
    cdef double v
    with nogil:
        for bi in range(B):
            for j in range(G):
                gates[bi, j] = b[j]
            for k in range(F):
                v = x[bi, k]
                for j in range(G):
                    gates[bi, j] += v * wx[k, j]
            for k in range(H):
                v = h_prev[bi, k]
                for j in range(G):
                    gates[bi, j] += v * wh[k, j]
            for j in range(H):
                gates[bi, j] = _sig(gates[bi, j])
                gates[bi, H + j] = _sig(gates[bi, H + j])
                gates[bi, 2 * H + j] = tanh(gates[bi, 2 * H + j])
                gates[bi, 3 * H + j] = _sig(gates[bi, 3 * H + j])
            for j in range(H):
                c[bi, j] = gates[bi, H + j] * c_prev[bi, j] + gates[bi, j] * gates[bi, 2 * H + j]
                h[bi, j] = gates[bi, 3 * H + j] * tanh(c[bi, j])
    return h_arr, c_arr, g_arr


def lstm_cell_backward(const double[:, :] dh, const double[:, :] dc_next,
                       const double[:, :] x, const double[:, :] h_prev,
                       const double[:, :] c_prev, const double[:, :] gates,
                       const double[:, :] c, const double[:, ::1] wx,
                       const double[:, ::1] wh, double[:, ::1] dwx,
                       double[:, ::1] dwh, double[:] db):
    """Exact gradients for one step; accumulates weight grads in place."""
    cdef Py_ssize_t B = x.shape[0], F = x.shape[1], H = h_prev.shape[1]
    cdef Py_ssize_t G = 4 * H
    dx_arr = np.empty((B, F))
    dhp_arr = np.empty((B, H))
    dcp_arr = np.empty((B, H))
    dz_arr = np.empty((B, G))
    cdef double[:, ::1] dx = dx_arr, dh_prev = dhp_arr, dc_prev = dcp_arr, dz = dz_arr
    cdef Py_ssize_t bi, j, k
    cdef double tc, dc, ig, fg, gg, og, acc, v
    with nogil:
        for bi in range(B):
            for j in range(H):
                ig = gates[bi, j]
                fg = gates[bi, H + j]
                gg = gates[bi, 2 * H + j]
                og = gates[bi, 3 * H + j]
                tc = tanh(c[bi, j])
                dc = dc_next[bi, j] + dh[bi, j] * og * (1.0 - tc * tc)
                dz[bi, j] = dc * gg * ig * (1.0 - ig)
                dz[bi, H + j] = dc * c_prev[bi, j] * fg * (1.0 - fg)
                dz[bi, 2 * H + j] = dc * ig * (1.0 - gg * gg)
                dz[bi, 3 * H + j] = dh[bi, j] * tc * og * (1.0 - og)
                dc_prev[bi, j] = dc * fg
            for k in range(F):
                acc = 0.0
                for j in range(G):
                    acc += dz[bi, j] * wx[k, j]
                dx[bi, k] = acc
            for k in range(H):
                acc = 0.0
                for j in range(G):
                    acc += dz[bi, j] * wh[k, j]
                dh_prev[bi, k] = acc
            for k in range(F):
                v = x[bi, k]
                for j in range(G):
                    dwx[k, j] += v * dz[bi, j]
            for k in range(H):
                v = h_prev[bi, k]
                for j in range(G):
                    dwh[k, j] += v * dz[bi, j]
            for j in range(G):
                db[j] += dz[bi, j]
    return dx_arr, dhp_arr, dcp_arr
