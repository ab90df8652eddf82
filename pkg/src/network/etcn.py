import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from plant_data.models import WindowedSample
from plant_data.services import stack_windows
from utils.seeding import derive_rng
from .constants import ForwardMode, ResBlockKind
from .layers.attention import self_attention_backward, self_attention_forward
from .layers.classifier import (
    classifier_backward,
    classifier_forward,
    cross_entropy_loss,
    softmax,
    softmax_cross_entropy_backward,
)
from .layers.conv import receptive_span
from .layers.residual import res_block_backward, res_block_forward
from .layers.tcn import tcn_block_backward, tcn_block_forward
from .models import ForwardCache, Gradients, NetworkConfig, NetworkParams

logger = logging.getLogger(__name__)

Batch = Union[np.ndarray, Sequence[WindowedSample]]


def receptive_field(config: NetworkConfig) -> int:
    """1 + sum over TCN convolutions of (k - 1) * d; two convolutions per block."""
    return 1 + sum(2 * (receptive_span(config.tcn_kernel_size, d) - 1) for d in config.tcn_dilations)


def check_receptive_field(config: NetworkConfig) -> int:
    rf = receptive_field(config)
    if rf < config.window_width:
        logger.warning(f"[NET] Receptive field {rf} is smaller than window width {config.window_width}")
    return rf


# ===============================================================================
# Parameter layout and initialization
# ===============================================================================

def parameter_shapes(config: NetworkConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    c, k = config.tcn_channels, config.tcn_kernel_size
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    for block in range(len(config.tcn_dilations)):
        c_in = config.n_vars if block == 0 else c
        for layer, fan_in in (("conv1", c_in), ("conv2", c)):
            shapes[f"tcn{block}.{layer}.v"] = (c, fan_in, k)
            shapes[f"tcn{block}.{layer}.g"] = (c,)
            shapes[f"tcn{block}.{layer}.b"] = (c,)
        if c_in != c:
            shapes[f"tcn{block}.skip.w"] = (c, c_in, 1)
            shapes[f"tcn{block}.skip.b"] = (c,)
    if config.sa_enabled:
        shapes["sa.wq"] = (config.attention_dim, c)
        shapes["sa.wk"] = (config.attention_dim, c)
        shapes["sa.wv"] = (c, c)
    if config.res_enabled:
        for conv, bn, width in _res_layers(config):
            shapes[f"res.{conv}.w"] = (c, c, width)
            shapes[f"res.{bn}.gamma"] = (c,)
            shapes[f"res.{bn}.beta"] = (c,)
    shapes["fc.w"] = (config.n_classes, c)
    shapes["fc.b"] = (config.n_classes,)
    return shapes


def _res_layers(config: NetworkConfig) -> List[Tuple[str, str, int]]:
    layers = [("conv1", "bn1", config.res_kernel_size), ("conv2", "bn2", config.res_kernel_size)]
    if config.res_block_kind == ResBlockKind.RESBLOCK2:
        layers.append(("short", "short_bn", 1))
    return layers


def buffer_shapes(config: NetworkConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    shapes: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
    if config.res_enabled:
        for _, bn, _ in _res_layers(config):
            shapes[f"res.{bn}.running_mean"] = (config.tcn_channels,)
            shapes[f"res.{bn}.running_var"] = (config.tcn_channels,)
    return shapes


def init_params(config: NetworkConfig, seed: int = 0) -> NetworkParams:
    """
    Conv directions ~ N(0, 2/fan_in) with g set to their norms (so w = v at start);
    attention and classifier weights ~ N(0, 1/C); biases and BN shifts 0, BN scales 1.
    """
    weights: Dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config).items():
        rng = derive_rng(seed, "init", name)
        suffix = name.rsplit(".", 1)[1]
        if suffix == "g":
            v = weights[name[:-1] + "v"]
            weights[name] = np.sqrt(np.sum(v.reshape(v.shape[0], -1) ** 2, axis=1))
        elif suffix in ("b", "beta"):
            weights[name] = np.zeros(shape)
        elif suffix == "gamma":
            weights[name] = np.ones(shape)
        elif len(shape) == 3:
            weights[name] = rng.normal(0.0, np.sqrt(2.0 / (shape[1] * shape[2])), size=shape)
        else:
            weights[name] = rng.normal(0.0, 1.0 / np.sqrt(shape[1]), size=shape)

    buffers = {
        name: (np.zeros(shape) if name.endswith("running_mean") else np.ones(shape))
        for name, shape in buffer_shapes(config).items()
    }
    params = NetworkParams(weights=weights, buffers=buffers)
    logger.debug(f"[NET] Initialized params count={params.n_parameters()} seed={seed}")
    return params


def check_params(params: NetworkParams, config: NetworkConfig) -> None:
    expected = parameter_shapes(config)
    if set(expected) != set(params.weights):
        missing = sorted(set(expected) - set(params.weights))
        extra = sorted(set(params.weights) - set(expected))
        raise ValueError(f"Parameters do not match config: missing={missing} unexpected={extra}")
    for name, shape in expected.items():
        if params.weights[name].shape != shape:
            raise ValueError(f"Parameter {name} has shape {params.weights[name].shape}, expected {shape}")
    for name, shape in buffer_shapes(config).items():
        if name not in params.buffers or params.buffers[name].shape != shape:
            raise ValueError(f"Buffer {name} missing or misshapen")


# ===============================================================================
# Forward / backward
# ===============================================================================

def _as_batch(batch: Batch) -> np.ndarray:
    if isinstance(batch, np.ndarray):
        return batch[None] if batch.ndim == 2 else batch
    x, _ = stack_windows(batch)
    return x


def tcn_stage_forward(x: np.ndarray, params: NetworkParams, config: NetworkConfig, mode: ForwardMode,
                      rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, List[Dict]]:
    caches = []
    h = x
    for block, dilation in enumerate(config.tcn_dilations):
        h, cache = tcn_block_forward(h, params.weights, f"tcn{block}", dilation, config.dropout_rate, mode, rng)
        caches.append(cache)
    return h, caches


def network_forward(batch: Batch, params: NetworkParams, config: NetworkConfig,
                    mode: ForwardMode = ForwardMode.EVAL,
                    rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, ForwardCache]:
    """
    TCN blocks -> self-attention (if enabled) -> residual block (if enabled) -> pooling + affine.

    Returns logits [N x n_classes]. Train mode updates BN running statistics in
    params.buffers and needs `rng` when dropout is active.
    """
    x = _as_batch(batch)
    if x.ndim != 3 or x.shape[1] != config.n_vars:
        raise ValueError(f"Input shape {x.shape} does not match n_vars={config.n_vars}")
    check_params(params, config)
    w = params.weights

    cache = ForwardCache(mode=mode)
    h, cache.layers["tcn"] = tcn_stage_forward(x, params, config, mode, rng)
    cache.tcn_output = h

    if config.sa_enabled:
        h, cache.attention, cache.layers["sa"] = self_attention_forward(h, w["sa.wq"], w["sa.wk"], w["sa.wv"])
    if config.res_enabled:
        h, cache.layers["res"] = res_block_forward(h, w, params.buffers, config.res_block_kind, mode)

    logits, cache.layers["fc"] = classifier_forward(h, w["fc.w"], w["fc.b"])
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("Non-finite logits")
    return logits, cache


def network_backward(cache: ForwardCache, logits: np.ndarray, labels: np.ndarray, params: NetworkParams,
                     loss_scale: float = 1.0) -> Gradients:
    """Gradients of loss_scale * mean cross-entropy with respect to every trainable parameter."""
    if cache.mode != ForwardMode.TRAIN:
        raise ValueError("network_backward needs a cache from a train-mode forward pass")

    grads: Gradients = {}
    dlogits = softmax_cross_entropy_backward(softmax(logits), np.asarray(labels), loss_scale)
    dh, grads["fc.w"], grads["fc.b"] = classifier_backward(dlogits, cache.layers["fc"])

    if "res" in cache.layers:
        dh, res_grads = res_block_backward(dh, cache.layers["res"])
        grads.update(res_grads)
    if "sa" in cache.layers:
        dh, sa_grads = self_attention_backward(dh, cache.layers["sa"])
        grads.update({f"sa.{k}": v for k, v in sa_grads.items()})
    for block_cache in reversed(cache.layers["tcn"]):
        dh, block_grads = tcn_block_backward(dh, block_cache)
        grads.update(block_grads)

    missing = set(params.weights) - set(grads)
    if missing:
        raise ValueError(f"Cache does not cover parameters {sorted(missing)}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"Non-finite gradient for {name}")
    return grads


def network_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    return cross_entropy_loss(softmax(logits), np.asarray(labels))


# ===============================================================================
# Model wrapper
# ===============================================================================

class ETCNModel:
    """A NetworkConfig with its parameters."""

    def __init__(self, config: NetworkConfig, params: Optional[NetworkParams] = None, seed: int = 0):
        self.config = config
        self.params = params if params is not None else init_params(config, seed)
        check_params(self.params, config)

    def forward(self, batch: Batch, mode: ForwardMode = ForwardMode.EVAL,
                rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, ForwardCache]:
        return network_forward(batch, self.params, self.config, mode, rng)

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray,
                       rng: Optional[np.random.Generator] = None) -> Tuple[float, np.ndarray, Gradients]:
        logits, cache = self.forward(x, ForwardMode.TRAIN, rng)
        return network_loss(logits, y), logits, network_backward(cache, logits, y, self.params)

    def logits(self, batch: Batch, batch_size: int = 256) -> np.ndarray:
        """Eval-mode logits, computed in chunks so sample lists are never stacked whole."""
        if isinstance(batch, np.ndarray) and batch.ndim == 2:
            batch = batch[None]
        if len(batch) == 0:
            raise ValueError("Cannot run the network on an empty batch")
        chunks = [self.forward(batch[i:i + batch_size])[0] for i in range(0, len(batch), batch_size)]
        return np.concatenate(chunks, axis=0)

    def predict_proba(self, batch: Batch, batch_size: int = 256) -> np.ndarray:
        return softmax(self.logits(batch, batch_size))

    def predict(self, batch: Batch, batch_size: int = 256) -> np.ndarray:
        return np.argmax(self.logits(batch, batch_size), axis=1)
