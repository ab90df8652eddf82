"""
Scaled dot-product self-attention across time.

Each of the T time steps is a token with C features:

    Q = Wq x    [d_k x T]      K = Wk x    [d_k x T]      V = Wv x    [C x T]
    S[t, s] = q_t . k_s / sqrt(d_k)
    alpha = row-softmax(S)
    y[:, t] = sum_s alpha[t, s] V[:, s]

No output projection and no residual add around the stage.
"""

from typing import Dict, Optional, Tuple

import numpy as np

from .classifier import softmax


def self_attention_forward(x: np.ndarray, wq: np.ndarray, wk: np.ndarray, wv: np.ndarray,
                           d_k: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, Dict]:
    """Returns (y, alpha, cache). Accepts [C x T] or [N x C x T]."""
    d_k = wq.shape[0] if d_k is None else d_k
    if d_k <= 0:
        raise ValueError(f"d_k must be positive, got {d_k}")
    if wq.shape[0] != d_k or wk.shape[0] != d_k:
        raise ValueError(f"Projection shapes {wq.shape}, {wk.shape} do not match d_k={d_k}")

    single = x.ndim == 2
    xb = x[None] if single else x
    if wq.shape[1] != xb.shape[1] or wv.shape != (xb.shape[1], xb.shape[1]):
        raise ValueError(f"Attention weights do not match {xb.shape[1]} input channels")

    scale = 1.0 / np.sqrt(d_k)
    q = np.einsum("kc,nct->nkt", wq, xb)
    k = np.einsum("kc,nct->nkt", wk, xb)
    v = np.einsum("oc,nct->not", wv, xb)
    scores = np.einsum("nkt,nks->nts", q, k) * scale
    alpha = softmax(scores, axis=-1)
    y = np.einsum("nts,ncs->nct", alpha, v)

    cache = {"x": xb, "q": q, "k": k, "v": v, "alpha": alpha, "scale": scale, "wq": wq, "wk": wk, "wv": wv}
    if single:
        return y[0], alpha[0], cache
    return y, alpha, cache


def self_attention_backward(dy: np.ndarray, cache: Dict) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """Returns (dx, {"wq", "wk", "wv"}) for a batched forward."""
    x, q, k, v, alpha = cache["x"], cache["q"], cache["k"], cache["v"], cache["alpha"]

    dv = np.einsum("nts,nct->ncs", alpha, dy)
    dalpha = np.einsum("nct,ncs->nts", dy, v)
    dscores = alpha * (dalpha - np.sum(dalpha * alpha, axis=-1, keepdims=True)) * cache["scale"]
    dq = np.einsum("nts,nks->nkt", dscores, k)
    dk = np.einsum("nts,nkt->nks", dscores, q)

    grads = {
        "wq": np.einsum("nkt,nct->kc", dq, x),
        "wk": np.einsum("nkt,nct->kc", dk, x),
        "wv": np.einsum("not,nct->oc", dv, x),
    }
    dx = (np.einsum("kc,nkt->nct", cache["wq"], dq)
          + np.einsum("kc,nkt->nct", cache["wk"], dk)
          + np.einsum("oc,not->nct", cache["wv"], dv))
    return dx, grads
