"""Pure-numpy im2col/col2im (fallback backend).

Layout is NHWC: inputs (N, H, W, C), patch matrices (N*Ho*Wo, kh*kw*C).
The matrix product against the kernel matrix happens in the dispatch layer;
these functions only gather and scatter patches.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

BACKEND = "numpy"


def out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def im2col(x, kh: int, kw: int, stride: int, pad: int):
    """x: (N,H,W,C) -> contiguous (N*Ho*Wo, kh*kw*C) patch matrix."""
    n, h, w, c = x.shape
    ho = out_size(h, kh, stride, pad)
    wo = out_size(w, kw, stride, pad)
    if pad:
        xp = np.zeros((n, h + 2 * pad, w + 2 * pad, c), dtype=x.dtype)
        xp[:, pad : pad + h, pad : pad + w, :] = x
    else:
        xp = x
    sn, sh, sw, sc = xp.strides
    view = as_strided(
        xp,
        shape=(n, ho, wo, kh, kw, c),
        strides=(sn, sh * stride, sw * stride, sh, sw, sc),
        writeable=False,
    )
    return view.reshape(n * ho * wo, kh * kw * c)


def col2im(gcols, n: int, h: int, w: int, c: int, kh: int, kw: int,
           stride: int, pad: int):
    """Scatter-add the patch-matrix gradient back to (N,H,W,C)."""
    ho = out_size(h, kh, stride, pad)
    wo = out_size(w, kw, stride, pad)
    g = gcols.reshape(n, ho, wo, kh, kw, c)
    gxp = np.zeros((n, h + 2 * pad, w + 2 * pad, c), dtype=gcols.dtype)
    for i in range(kh):
        for j in range(kw):
            gxp[:, i : i + ho * stride : stride, j : j + wo * stride : stride, :] += (
                g[:, :, :, i, j, :]
            )
    if pad:
        return np.ascontiguousarray(gxp[:, pad : pad + h, pad : pad + w, :])
    return gxp
