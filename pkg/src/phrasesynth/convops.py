"""Differentiable array ops the two subnets are built from.

Every op comes as a forward returning (output, cache) and a backward
consuming (grad_output, cache). Backward implementations are verified
against central finite differences in the test suite.

1-D convolutions run as im2col + BLAS matmul (their GEMM shapes are fat).
The 3x3 2-D convolutions used by the refiner have skinny channel counts
where BLAS wastes the machine, so those run as numba kernels instead.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numpy.lib.stride_tricks import sliding_window_view


def uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    """Weights ~ uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)), float32."""
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


# ---------------------------------------------------------------------------
# 1-D convolution (stride 1, zero 'same' padding), im2col + GEMM


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: (B, C, L), w: (O, C, k) with k odd, b: (O,) -> y: (B, O, L)."""
    batch, c_in, length = x.shape
    c_out, _, k = w.shape
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    windows = sliding_window_view(xp, k, axis=2)          # (B, C, L, k)
    cols = np.ascontiguousarray(windows.transpose(0, 1, 3, 2)).reshape(
        batch, c_in * k, length
    )
    y = np.matmul(w.reshape(c_out, c_in * k), cols) + b[:, None]
    return y, (cols, w, x.shape)


def conv1d_backward(dy: np.ndarray, cache):
    cols, w, x_shape = cache
    batch, c_in, length = x_shape
    c_out, _, k = w.shape
    pad = (k - 1) // 2

    dw = np.matmul(dy, cols.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
    db = dy.sum(axis=(0, 2))
    dcols = np.matmul(w.reshape(c_out, c_in * k).T, dy)   # (B, C*k, L)
    dwin = dcols.reshape(batch, c_in, k, length)
    dxp = np.zeros((batch, c_in, length + 2 * pad), dtype=dy.dtype)
    for j in range(k):
        dxp[:, :, j:j + length] += dwin[:, :, j, :]
    dx = dxp[:, :, pad:pad + length] if pad else dxp
    return dx, dw, db


# ---------------------------------------------------------------------------
# stride-2 decimation and its transpose (zero stuffing)


def decimate2_forward(x: np.ndarray):
    """Keep every other time step: (B, C, L) -> (B, C, L // 2)."""
    return np.ascontiguousarray(x[:, :, ::2]), x.shape


def decimate2_backward(dy: np.ndarray, x_shape):
    dx = np.zeros(x_shape, dtype=dy.dtype)
    dx[:, :, ::2] = dy
    return dx


def zerostuff2_forward(x: np.ndarray):
    """Insert a zero after every time step: (B, C, L) -> (B, C, 2L)."""
    batch, c, length = x.shape
    y = np.zeros((batch, c, 2 * length), dtype=x.dtype)
    y[:, :, ::2] = x
    return y, x.shape


def zerostuff2_backward(dy: np.ndarray, x_shape):
    return np.ascontiguousarray(dy[:, :, ::2])


# ---------------------------------------------------------------------------
# pointwise nonlinearities


def softplus_forward(x: np.ndarray):
    """log(1 + exp(x)), evaluated stably; smooth and positive."""
    y = np.logaddexp(np.array(0, dtype=x.dtype), x)
    return y, x


def softplus_backward(dy: np.ndarray, x: np.ndarray):
    # d softplus / dx = sigmoid(x), written via tanh for stability
    half = np.array(0.5, dtype=x.dtype)
    return dy * (half * (1.0 + np.tanh(half * x)))


def tanh_forward(x: np.ndarray):
    y = np.tanh(x)
    return y, y


def tanh_backward(dy: np.ndarray, y: np.ndarray):
    return dy * (1.0 - y * y)


LEAKY_SLOPE = 0.1


def leaky_relu_forward(x: np.ndarray):
    y = np.maximum(x, 0) + LEAKY_SLOPE * np.minimum(x, 0)
    return y, x


def leaky_relu_backward(dy: np.ndarray, x: np.ndarray):
    slope = np.where(x > 0, np.array(1.0, x.dtype), np.array(LEAKY_SLOPE, x.dtype))
    return dy * slope


# ---------------------------------------------------------------------------
# 3x3 2-D convolution (stride 1, zero 'same' padding), numba kernels


@njit(cache=True)
def _conv2d3_kernel(xp, w, b, out):
    # xp: (B, C, F+2, T+2), w: (O, C, 3, 3), b: (O,), out: (B, O, F, T)
    n_b, n_o, n_f, n_t = out.shape
    n_c = xp.shape[1]
    for bi in range(n_b):
        for o in range(n_o):
            for i in range(n_f):
                row = np.zeros(n_t, dtype=out.dtype)
                for c in range(n_c):
                    for di in range(3):
                        for dj in range(3):
                            coeff = w[o, c, di, dj]
                            for j in range(n_t):
                                row[j] += coeff * xp[bi, c, i + di, j + dj]
                for j in range(n_t):
                    out[bi, o, i, j] = row[j] + b[o]


@njit(cache=True)
def _conv2d3_dw_kernel(xp, dy, dw, db):
    # xp: (B, C, F+2, T+2), dy: (B, O, F, T) -> dw: (O, C, 3, 3), db: (O,)
    # per-tap row accumulators keep the inner loop elementwise so it
    # vectorizes; the reduction to a scalar happens once per (o, c)
    n_b, n_o, n_f, n_t = dy.shape
    n_c = xp.shape[1]
    rows = np.empty((9, n_t), dtype=dw.dtype)
    for bi in range(n_b):
        for o in range(n_o):
            for c in range(n_c):
                rows[:] = 0.0
                for i in range(n_f):
                    for di in range(3):
                        for dj in range(3):
                            r = rows[di * 3 + dj]
                            for j in range(n_t):
                                r[j] += dy[bi, o, i, j] * xp[bi, c, i + di, j + dj]
                for di in range(3):
                    for dj in range(3):
                        acc = 0.0
                        for j in range(n_t):
                            acc += rows[di * 3 + dj, j]
                        dw[o, c, di, dj] += acc
        for o in range(n_o):
            s = 0.0
            for i in range(n_f):
                for j in range(n_t):
                    s += dy[bi, o, i, j]
            db[o] += s


def _pad2(x: np.ndarray) -> np.ndarray:
    return np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))


def conv2d3_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: (B, C, F, T), w: (O, C, 3, 3), b: (O,) -> y: (B, O, F, T)."""
    xp = _pad2(x)
    batch, _, f, t = x.shape
    y = np.empty((batch, w.shape[0], f, t), dtype=x.dtype)
    _conv2d3_kernel(xp, w, b, y)
    return y, (xp, w)


def conv2d3_backward(dy: np.ndarray, cache):
    xp, w = cache
    dw = np.zeros_like(w)
    db = np.zeros(w.shape[0], dtype=w.dtype)
    _conv2d3_dw_kernel(xp, np.ascontiguousarray(dy), dw, db)

    # dx is a full correlation: convolve dy with the flipped, transposed
    # kernel, which reuses the forward kernel on transformed weights
    wt = np.ascontiguousarray(w.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
    dyp = _pad2(dy)
    dx = np.empty(
        (dy.shape[0], w.shape[1], dy.shape[2], dy.shape[3]), dtype=dy.dtype
    )
    _conv2d3_kernel(dyp, wt, np.zeros(w.shape[1], dtype=w.dtype), dx)
    return dx, dw, db
