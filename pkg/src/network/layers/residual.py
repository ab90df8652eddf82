from typing import Dict, Tuple

import numpy as np

from ..constants import ForwardMode, ResBlockKind
from .batchnorm import batch_norm_backward, batch_norm_forward
from .conv import conv1d_backward, conv1d_forward


def _conv_bn(x, params, buffers, conv: str, bn: str, mode):
    c, conv_cache = conv1d_forward(x, params[f"{conv}.w"], None, 1)
    y, bn_cache = batch_norm_forward(
        c, params[f"{bn}.gamma"], params[f"{bn}.beta"],
        buffers.get(f"{bn}.running_mean"), buffers.get(f"{bn}.running_var"), mode,
    )
    return y, {"conv": conv_cache, "bn": bn_cache, "conv_name": conv, "bn_name": bn}


def _conv_bn_backward(dy, cache, grads):
    dc, grads[f"{cache['bn_name']}.gamma"], grads[f"{cache['bn_name']}.beta"] = batch_norm_backward(dy, cache["bn"])
    dx, grads[f"{cache['conv_name']}.w"], _ = conv1d_backward(dc, cache["conv"])
    return dx


def res_block_forward(x: np.ndarray, params: Dict[str, np.ndarray], buffers: Dict[str, np.ndarray],
                      kind: ResBlockKind, mode: ForwardMode, prefix: str = "res") -> Tuple[np.ndarray, Dict]:
    """
    y = ReLU(F(x) + h(x)) with F = Conv -> BN -> ReLU -> Conv -> BN.

    h is the identity for ResBlock1 and 1x1 Conv -> BN for ResBlock2.
    Convolutions are causal and bias-free.
    """
    c_out = params[f"{prefix}.conv2.w"].shape[0]
    if kind == ResBlockKind.RESBLOCK1 and x.shape[1] != c_out:
        raise ValueError(f"ResBlock1 needs equal input/output channels, got {x.shape[1]} -> {c_out}")

    f1, cache1 = _conv_bn(x, params, buffers, f"{prefix}.conv1", f"{prefix}.bn1", mode)
    r1 = np.maximum(f1, 0.0)
    f2, cache2 = _conv_bn(r1, params, buffers, f"{prefix}.conv2", f"{prefix}.bn2", mode)

    if kind == ResBlockKind.RESBLOCK2:
        h, short_cache = _conv_bn(x, params, buffers, f"{prefix}.short", f"{prefix}.short_bn", mode)
    else:
        h, short_cache = x, None

    z = f2 + h
    y = np.maximum(z, 0.0)
    return y, {"main1": cache1, "main2": cache2, "short": short_cache, "f1": f1, "z": z}


def res_block_backward(dy: np.ndarray, cache: Dict) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    grads: Dict[str, np.ndarray] = {}
    dz = dy * (cache["z"] > 0)

    dr1 = _conv_bn_backward(dz, cache["main2"], grads)
    dx = _conv_bn_backward(dr1 * (cache["f1"] > 0), cache["main1"], grads)

    if cache["short"] is not None:
        dx = dx + _conv_bn_backward(dz, cache["short"], grads)
    else:
        dx = dx + dz
    return dx, grads
