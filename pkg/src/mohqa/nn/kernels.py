"""Hot numeric kernels for the 2-D convolution layers.

Two implementations are provided: numba @njit loops (default) and a pure
numpy path that loops only over the kernel window. Set MOHQA_DISABLE_NUMBA=1
before import to force the numpy path (numba's own NUMBA_DISABLE_JIT is
also honored). benchmarks/bench_kernels.py compares the two.

Shapes (valid padding, square kernels):
  x: (B, C_in, H, W)   w: (C_out, C_in, K, K)   b: (C_out,)
  y: (B, C_out, H_out, W_out) with H_out = (H - K)//stride + 1
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["conv2d_forward", "conv2d_backward", "USE_NUMBA"]

USE_NUMBA = not (
    os.environ.get("MOHQA_DISABLE_NUMBA", "0") == "1"
    or os.environ.get("NUMBA_DISABLE_JIT", "0") == "1"
)


def _conv2d_forward_numpy(x, w, b, stride):
    B, C_in, H, W = x.shape
    C_out, _, K, _ = w.shape
    H_out = (H - K) // stride + 1
    W_out = (W - K) // stride + 1
    y = np.empty((B, C_out, H_out, W_out))
    y[:] = b[None, :, None, None]
    for ki in range(K):
        for kj in range(K):
            patch = x[:, :, ki : ki + stride * H_out : stride, kj : kj + stride * W_out : stride]
            y += np.einsum("bcij,oc->boij", patch, w[:, :, ki, kj])
    return y


def _conv2d_backward_numpy(x, w, stride, gy):
    B, C_in, H, W = x.shape
    C_out, _, K, _ = w.shape
    _, _, H_out, W_out = gy.shape
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    gb = gy.sum(axis=(0, 2, 3))
    for ki in range(K):
        for kj in range(K):
            patch = x[:, :, ki : ki + stride * H_out : stride, kj : kj + stride * W_out : stride]
            gw[:, :, ki, kj] = np.einsum("boij,bcij->oc", gy, patch)
            gx[:, :, ki : ki + stride * H_out : stride, kj : kj + stride * W_out : stride] += (
                np.einsum("boij,oc->bcij", gy, w[:, :, ki, kj])
            )
    return gx, gw, gb


if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _im2col(x, K, stride, H_out, W_out):  # pragma: no cover
        B, C_in, H, W = x.shape
        cols = np.empty((B, C_in * K * K, H_out * W_out))
        for n in range(B):
            row = 0
            for c in range(C_in):
                for ki in range(K):
                    for kj in range(K):
                        col = 0
                        for i in range(H_out):
                            xi = i * stride + ki
                            for j in range(W_out):
                                cols[n, row, col] = x[n, c, xi, j * stride + kj]
                                col += 1
                        row += 1
        return cols

    @njit(cache=True)
    def _conv2d_forward_jit(x, w, b, stride):  # pragma: no cover - timed via benchmark
        B, C_in, H, W = x.shape
        C_out, _, K, _ = w.shape
        H_out = (H - K) // stride + 1
        W_out = (W - K) // stride + 1
        cols = _im2col(x, K, stride, H_out, W_out)
        w2 = np.ascontiguousarray(w).reshape(C_out, C_in * K * K)
        y = np.empty((B, C_out, H_out, W_out))
        for n in range(B):
            prod = w2 @ cols[n]
            for o in range(C_out):
                col = 0
                for i in range(H_out):
                    for j in range(W_out):
                        y[n, o, i, j] = prod[o, col] + b[o]
                        col += 1
        return y

    @njit(cache=True)
    def _conv2d_backward_jit(x, w, stride, gy):  # pragma: no cover
        B, C_in, H, W = x.shape
        C_out, _, K, _ = w.shape
        _, _, H_out, W_out = gy.shape
        cols = _im2col(x, K, stride, H_out, W_out)
        w2 = np.ascontiguousarray(w).reshape(C_out, C_in * K * K)
        gy2 = np.ascontiguousarray(gy).reshape(B, C_out, H_out * W_out)
        gx = np.zeros_like(x)
        gw2 = np.zeros((C_out, C_in * K * K))
        gb = np.zeros(C_out)
        for n in range(B):
            gy_n = gy2[n]
            gw2 += gy_n @ cols[n].T
            gcols = w2.T @ gy_n  # (C_in*K*K, H_out*W_out)
            row = 0
            for c in range(C_in):
                for ki in range(K):
                    for kj in range(K):
                        col = 0
                        for i in range(H_out):
                            xi = i * stride + ki
                            for j in range(W_out):
                                gx[n, c, xi, j * stride + kj] += gcols[row, col]
                                col += 1
                        row += 1
            for o in range(C_out):
                for t in range(H_out * W_out):
                    gb[o] += gy_n[o, t]
        gw = gw2.reshape(C_out, C_in, K, K).copy()
        return gx, gw, gb

    conv2d_forward = _conv2d_forward_jit
    conv2d_backward = _conv2d_backward_jit
else:
    conv2d_forward = _conv2d_forward_numpy
    conv2d_backward = _conv2d_backward_numpy
