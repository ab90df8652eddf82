from typing import Dict, Optional, Tuple

import numpy as np

from ..constants import ForwardMode
from .conv import conv1d_backward, conv1d_forward, weight_norm_apply, weight_norm_backward


def dropout_mask(shape, rate: float, mode: ForwardMode, rng: Optional[np.random.Generator]) -> Optional[np.ndarray]:
    """Inverted dropout mask, or None when dropout is a no-op (eval mode or rate 0)."""
    if mode != ForwardMode.TRAIN or rate <= 0:
        return None
    if rng is None:
        raise ValueError("Train-mode dropout needs a random generator")
    return (rng.random(shape) >= rate) / (1.0 - rate)


def tcn_block_forward(x: np.ndarray, params: Dict[str, np.ndarray], prefix: str, dilation: int,
                      dropout_rate: float, mode: ForwardMode,
                      rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, Dict]:
    """
    [weight-normed causal conv -> ReLU -> dropout] x 2, plus the skip path.

    The skip path is a 1x1 convolution when `<prefix>.skip.w` exists (channel
    counts differ) and the identity otherwise. Output = main + skip.
    """
    cache: Dict = {}
    h = x
    for layer in ("conv1", "conv2"):
        v, g = params[f"{prefix}.{layer}.v"], params[f"{prefix}.{layer}.g"]
        w = weight_norm_apply(v, g)
        pre, conv_cache = conv1d_forward(h, w, params[f"{prefix}.{layer}.b"], dilation)
        act = np.maximum(pre, 0.0)
        mask = dropout_mask(act.shape, dropout_rate, mode, rng)
        h = act if mask is None else act * mask
        cache[layer] = {"conv": conv_cache, "pre": pre, "mask": mask, "v": v, "g": g}

    if f"{prefix}.skip.w" in params:
        skip, cache["skip"] = conv1d_forward(x, params[f"{prefix}.skip.w"], params[f"{prefix}.skip.b"])
    else:
        if x.shape[1] != h.shape[1]:
            raise ValueError(f"{prefix}: identity skip needs equal channels, got {x.shape[1]} -> {h.shape[1]}")
        skip, cache["skip"] = x, None

    y = h + skip
    if not np.all(np.isfinite(y)):
        raise FloatingPointError(f"{prefix}: non-finite activations")
    cache["prefix"] = prefix
    return y, cache


def tcn_block_backward(dy: np.ndarray, cache: Dict) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    prefix = cache["prefix"]
    grads: Dict[str, np.ndarray] = {}

    if cache["skip"] is not None:
        dx, grads[f"{prefix}.skip.w"], grads[f"{prefix}.skip.b"] = conv1d_backward(dy, cache["skip"])
    else:
        dx = dy.copy()

    dh = dy
    for layer in ("conv2", "conv1"):
        entry = cache[layer]
        dact = dh if entry["mask"] is None else dh * entry["mask"]
        dpre = dact * (entry["pre"] > 0)
        dh, dw, grads[f"{prefix}.{layer}.b"] = conv1d_backward(dpre, entry["conv"])
        grads[f"{prefix}.{layer}.v"], grads[f"{prefix}.{layer}.g"] = weight_norm_backward(dw, entry["v"], entry["g"])

    return dx + dh, grads
