from typing import Dict, Tuple, Union

import numpy as np

from ..constants import LOG_CLAMP


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _check_labels(labels, n_classes: int) -> np.ndarray:
    labels = np.atleast_1d(np.asarray(labels))
    if not np.issubdtype(labels.dtype, np.integer) or np.any(labels < 0) or np.any(labels >= n_classes):
        raise ValueError(f"Class ids must be integers in [0, {n_classes - 1}], got {labels.tolist()}")
    return labels


def cross_entropy_loss(probabilities: np.ndarray, true_class: Union[int, np.ndarray]) -> float:
    """Mean of -log p[true] over the batch, with p clamped at 1e-12."""
    probs = np.atleast_2d(probabilities)
    labels = _check_labels(true_class, probs.shape[1])
    if labels.shape[0] != probs.shape[0]:
        raise ValueError(f"{labels.shape[0]} labels for {probs.shape[0]} probability rows")
    picked = probs[np.arange(probs.shape[0]), labels]
    return float(np.mean(-np.log(np.maximum(picked, LOG_CLAMP))))


def softmax_cross_entropy_backward(probabilities: np.ndarray, labels: np.ndarray,
                                   loss_scale: float = 1.0) -> np.ndarray:
    """d(mean CE)/d(logits) = (p - onehot) / N."""
    labels = _check_labels(labels, probabilities.shape[1])
    dlogits = probabilities.copy()
    dlogits[np.arange(labels.shape[0]), labels] -= 1.0
    return dlogits * (loss_scale / labels.shape[0])


def classifier_forward(features: np.ndarray, w: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, Dict]:
    """Global average pooling over time, then logits = W . pooled + b."""
    single = features.ndim == 2
    feats = features[None] if single else features
    if feats.shape[1] != w.shape[1]:
        raise ValueError(f"Feature channels {feats.shape[1]} do not match classifier input {w.shape[1]}")
    pooled = feats.mean(axis=2)
    logits = pooled @ w.T + b
    cache = {"pooled": pooled, "w": w, "T": feats.shape[2]}
    return (logits[0] if single else logits), cache


def classifier_backward(dlogits: np.ndarray, cache: Dict) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dfeatures, dW, db) for a batched forward."""
    dw = dlogits.T @ cache["pooled"]
    db = dlogits.sum(axis=0)
    dpooled = dlogits @ cache["w"]
    dfeatures = np.repeat(dpooled[:, :, None] / cache["T"], cache["T"], axis=2)
    return dfeatures, dw, db
