from typing import Dict, Optional, Tuple

import numpy as np

from ..constants import BN_EPS, BN_MOMENTUM, ForwardMode


def batch_norm_forward(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                       running_mean: Optional[np.ndarray], running_var: Optional[np.ndarray],
                       mode: ForwardMode, eps: float = BN_EPS,
                       momentum: float = BN_MOMENTUM) -> Tuple[np.ndarray, Dict]:
    """
    Per-channel batch normalization of [N x C x T] activations, statistics over (N, T).

    Train mode normalizes with batch statistics and updates running_mean and
    running_var in place: running = momentum * running + (1 - momentum) * batch.
    Eval mode normalizes with the running statistics.
    """
    if mode == ForwardMode.TRAIN:
        if x.shape[0] < 2:
            raise ValueError("Batch normalization in train mode needs a batch of at least 2")
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        if running_mean is not None:
            running_mean *= momentum
            running_mean += (1.0 - momentum) * mean
        if running_var is not None:
            running_var *= momentum
            running_var += (1.0 - momentum) * var
    else:
        if running_mean is None or running_var is None:
            raise ValueError("Eval-mode batch normalization needs running statistics")
        mean, var = running_mean, running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    y = gamma[None, :, None] * xhat + beta[None, :, None]
    return y, {"xhat": xhat, "inv_std": inv_std, "gamma": gamma, "mode": mode}


def batch_norm_backward(dy: np.ndarray, cache: Dict) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dgamma, dbeta). Train mode differentiates through the batch statistics."""
    xhat, inv_std, gamma = cache["xhat"], cache["inv_std"], cache["gamma"]
    dgamma = np.sum(dy * xhat, axis=(0, 2))
    dbeta = np.sum(dy, axis=(0, 2))
    dxhat = dy * gamma[None, :, None]

    if cache["mode"] != ForwardMode.TRAIN:
        return dxhat * inv_std[None, :, None], dgamma, dbeta

    m = dy.shape[0] * dy.shape[2]
    sum_dxhat = np.sum(dxhat, axis=(0, 2), keepdims=True)
    sum_dxhat_xhat = np.sum(dxhat * xhat, axis=(0, 2), keepdims=True)
    dx = inv_std[None, :, None] / m * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)
    return dx, dgamma, dbeta
