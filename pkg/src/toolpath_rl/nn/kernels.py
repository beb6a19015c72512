"""Convolution built from im2col/col2im plus a BLAS matrix product.

The compiled Cython gather/scatter is used when the extension built
successfully; otherwise the numpy fallback is selected at import time. Set
``TOOLPATH_RL_BACKEND=numpy`` (or ``cython``) to force a choice.

Layout is NHWC throughout: x (N,H,W,C), y (N,Ho,Wo,F); conv weights keep
their checkpoint shape (F, C, kh, kw) and are reshaped here per call.
"""

from __future__ import annotations

import os

import numpy as np

from . import kernels_np

_forced = os.environ.get("TOOLPATH_RL_BACKEND", "").lower()

_impl = kernels_np
if _forced != "numpy":
    try:
        from . import _convkernels as _ext

        _impl = _ext
    except ImportError:
        if _forced == "cython":
            raise ImportError(
                "TOOLPATH_RL_BACKEND=cython but the compiled extension is "
                "not available; rebuild with `pip install -e . --no-build-isolation`"
            ) from None

BACKEND: str = _impl.BACKEND
out_size = kernels_np.out_size


def _w_matrix(w: np.ndarray) -> np.ndarray:
    # (F,C,kh,kw) -> (kh*kw*C, F), matching im2col's column order.
    f = w.shape[0]
    return np.ascontiguousarray(w.transpose(2, 3, 1, 0).reshape(-1, f))


def conv2d_forward(x, w, b, stride: int, pad: int, want_cols: bool = False):
    """x: (N,H,W,C), w: (F,C,kh,kw), b: (F,) -> (N,Ho,Wo,F).

    With ``want_cols`` also returns the im2col matrix so a following
    conv2d_backward can skip recomputing it.
    """
    n, h, wd, c = x.shape
    f, _, kh, kw = w.shape
    ho = out_size(h, kh, stride, pad)
    wo = out_size(wd, kw, stride, pad)
    cols = _impl.im2col(x, kh, kw, stride, pad)
    y = cols @ _w_matrix(w)
    y += b
    y = y.reshape(n, ho, wo, f)
    if want_cols:
        return y, cols
    return y


def conv2d_backward(x, w, grad_y, stride: int, pad: int, need_grad_x: bool = True,
                    cols: np.ndarray | None = None):
    """Returns (grad_x, grad_w, grad_b); grad_y is (N,Ho,Wo,F).

    Pass ``need_grad_x=False`` for the first layer of a network, where the
    input-image gradient is discarded; this skips a GEMM and the col2im
    scatter. ``grad_x`` is then None. ``cols`` accepts the im2col matrix
    saved by conv2d_forward(..., want_cols=True) to avoid the regather.
    """
    n, h, wd, c = x.shape
    f, _, kh, kw = w.shape
    if cols is None:
        cols = _impl.im2col(x, kh, kw, stride, pad)
    gy = grad_y.reshape(-1, f)
    gb = gy.sum(axis=0)
    gw_mat = cols.T @ gy  # (kh*kw*C, F)
    gw = np.ascontiguousarray(
        gw_mat.reshape(kh, kw, c, f).transpose(3, 2, 0, 1)
    )
    if not need_grad_x:
        return None, gw, gb
    gcols = np.ascontiguousarray(gy @ _w_matrix(w).T)
    gx = _impl.col2im(gcols, n, h, wd, c, kh, kw, stride, pad)
    return gx, gw, gb
