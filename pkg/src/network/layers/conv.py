"""
Dilated causal 1-D convolution and weight normalization.

Activations are [N x C x T]. A kernel has shape [C_out x C_in x k] and tap i
multiplies the input i*d steps in the past:

    y[n, o, s] = b[o] + sum_{c, i} w[o, c, i] * x[n, c, s - i*d]

with zeros to the left of t = 0, so the output keeps length T.
"""

from typing import Dict, Optional, Tuple

import numpy as np


def receptive_span(k: int, d: int) -> int:
    """Number of input steps one output of a single k/d convolution sees."""
    return 1 + (k - 1) * d


def _taps(x: np.ndarray, k: int, d: int) -> np.ndarray:
    """Stack of delayed copies of x: [N x C x k x T], entry i is x shifted right by i*d."""
    n, c, t = x.shape
    pad = (k - 1) * d
    xp = np.pad(x, ((0, 0), (0, 0), (pad, 0)))
    return np.stack([xp[:, :, pad - i * d: pad - i * d + t] for i in range(k)], axis=2)


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray], dilation: int = 1) -> Tuple[np.ndarray, Dict]:
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ValueError(f"Shape mismatch: input {x.shape} vs kernel {w.shape}")
    if dilation < 1:
        raise ValueError(f"Dilation must be >= 1, got {dilation}")
    cols = _taps(x, w.shape[2], dilation)
    y = np.einsum("oci,ncit->not", w, cols)
    if b is not None:
        y = y + b[None, :, None]
    return y, {"cols": cols, "w": w, "dilation": dilation, "has_bias": b is not None}


def conv1d_backward(dy: np.ndarray, cache: Dict) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Returns (dx, dw, db); db is None for bias-free convolutions."""
    cols, w, d = cache["cols"], cache["w"], cache["dilation"]
    k = w.shape[2]
    t = dy.shape[2]
    dw = np.einsum("not,ncit->oci", dy, cols)
    db = dy.sum(axis=(0, 2)) if cache["has_bias"] else None

    dcols = np.einsum("oci,not->ncit", w, dy)
    pad = (k - 1) * d
    dxp = np.zeros((dy.shape[0], w.shape[1], t + pad))
    for i in range(k):
        dxp[:, :, pad - i * d: pad - i * d + t] += dcols[:, :, i, :]
    return dxp[:, :, pad:], dw, db


def dilated_causal_conv_forward(x: np.ndarray, weights: np.ndarray, bias: Optional[np.ndarray],
                                k: int, d: int) -> np.ndarray:
    """Single-sample [C_in x T] or batched [N x C_in x T] convolution."""
    if k < 1 or d < 1:
        raise ValueError(f"Kernel size and dilation must be >= 1, got k={k} d={d}")
    if weights.ndim != 3 or weights.shape[2] != k:
        raise ValueError(f"Kernel shape {weights.shape} does not match k={k}")
    single = x.ndim == 2
    y, _ = conv1d_forward(x[None] if single else x, weights, bias, d)
    return y[0] if single else y


# ===============================================================================
# Weight normalization: w = g * v / ||v||, one norm per output channel
# ===============================================================================

def _row_norms(v: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(v.reshape(v.shape[0], -1) ** 2, axis=1)) if v.ndim > 1 else np.sqrt(np.sum(v ** 2))
    if np.any(norms == 0):
        raise ValueError("Weight normalization needs a non-zero direction vector")
    return norms


def _expand(a: np.ndarray, like: np.ndarray) -> np.ndarray:
    return np.reshape(a, a.shape + (1,) * (like.ndim - np.ndim(a)))


def weight_norm_apply(v: np.ndarray, g) -> np.ndarray:
    norms = _row_norms(v)
    return _expand(np.asarray(g, dtype=float), v) * v / _expand(norms, v)


def weight_norm_backward(dw: np.ndarray, v: np.ndarray, g) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients (dv, dg) of the loss given dw = dL/dw."""
    g = np.asarray(g, dtype=float)
    norms = _expand(_row_norms(v), v)
    u = v / norms
    axes = tuple(range(1, v.ndim)) if v.ndim > 1 else None
    dg = np.sum(dw * u, axis=axes)
    dv = _expand(g, v) / norms * (dw - u * _expand(dg, v))
    return dv, dg
