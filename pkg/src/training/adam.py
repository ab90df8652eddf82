import logging
from typing import Tuple

import numpy as np

from network.models import Gradients, NetworkParams
from .models import AdamState

logger = logging.getLogger(__name__)


def init_adam(params: NetworkParams) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(v) for k, v in params.weights.items()},
        v={k: np.zeros_like(v) for k, v in params.weights.items()},
    )


def adam_step(params: NetworkParams, grads: Gradients, state: AdamState, lr: float) -> Tuple[NetworkParams, AdamState]:
    """
    One bias-corrected Adam update, applied in place to params.weights and state.

    Raises FloatingPointError before touching anything if a gradient is not finite.
    """
    if set(grads) != set(params.weights):
        raise ValueError(f"Gradient keys do not match parameters: {sorted(set(grads) ^ set(params.weights))}")
    for name, g in grads.items():
        if g.shape != params.weights[name].shape:
            raise ValueError(f"Gradient {name} has shape {g.shape}, parameter has {params.weights[name].shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"Non-finite gradient for {name} at step {state.t + 1}")

    if not state.m:
        state.m = {k: np.zeros_like(v) for k, v in params.weights.items()}
        state.v = {k: np.zeros_like(v) for k, v in params.weights.items()}

    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, g in grads.items():
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        params.weights[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
