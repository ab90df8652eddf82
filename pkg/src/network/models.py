from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from plant_data.constants import DEFAULT_N_VARS, DEFAULT_WINDOW_WIDTH, N_CLASSES
from utils.config import split_csv_list
from .constants import (
    DEFAULT_ATTENTION_DIM,
    DEFAULT_DILATIONS,
    DEFAULT_DROPOUT,
    DEFAULT_RES_KERNEL,
    DEFAULT_TCN_CHANNELS,
    DEFAULT_TCN_KERNEL,
    VARIANT_TOGGLES,
    ForwardMode,
    ModelVariant,
    ResBlockKind,
)

# Per-parameter gradient arrays, keyed like NetworkParams.weights
Gradients = Dict[str, np.ndarray]


class NetworkConfig(BaseModel):
    n_vars: int = DEFAULT_N_VARS
    window_width: int = DEFAULT_WINDOW_WIDTH
    n_classes: int = N_CLASSES
    tcn_channels: int = DEFAULT_TCN_CHANNELS
    tcn_kernel_size: int = DEFAULT_TCN_KERNEL
    tcn_dilations: List[int] = Field(default_factory=lambda: list(DEFAULT_DILATIONS))
    dropout_rate: float = DEFAULT_DROPOUT
    attention_dim: int = DEFAULT_ATTENTION_DIM
    res_block_kind: ResBlockKind = ResBlockKind.RESBLOCK2
    res_kernel_size: int = DEFAULT_RES_KERNEL
    sa_enabled: bool = True
    res_enabled: bool = True

    @field_validator("tcn_dilations", mode="before")
    @classmethod
    def _parse_dilations(cls, value):
        return split_csv_list(value)

    @model_validator(mode="after")
    def _check(self):
        if self.tcn_kernel_size < 1 or self.res_kernel_size < 1:
            raise ValueError("Kernel sizes must be >= 1")
        if not self.tcn_dilations or any(d < 1 for d in self.tcn_dilations):
            raise ValueError(f"Dilations must be a non-empty list of positive ints, got {self.tcn_dilations}")
        if not 0.0 <= self.dropout_rate <= 0.5:
            raise ValueError(f"dropout_rate must lie in [0, 0.5], got {self.dropout_rate}")
        if self.attention_dim < 1:
            raise ValueError(f"attention_dim must be positive, got {self.attention_dim}")
        if min(self.n_vars, self.window_width, self.n_classes, self.tcn_channels) < 1:
            raise ValueError("n_vars, window_width, n_classes and tcn_channels must be positive")
        return self

    @classmethod
    def variant(cls, name: str, **overrides) -> "NetworkConfig":
        """Config for one of the named ablation compositions."""
        try:
            toggles = VARIANT_TOGGLES[ModelVariant(name)]
        except ValueError:
            raise ValueError(f"Unknown model variant {name!r} (expected one of {[v.value for v in ModelVariant]})") from None
        return cls(**{**overrides, **toggles._asdict()})

    @property
    def variant_name(self) -> Optional[str]:
        for variant, toggles in VARIANT_TOGGLES.items():
            if (self.sa_enabled, self.res_enabled) != (toggles.sa_enabled, toggles.res_enabled):
                continue
            if not self.res_enabled or self.res_block_kind == toggles.res_block_kind:
                return variant.value
        return None


class NetworkParams(BaseModel):
    """Trainable weights plus BN running statistics (buffers), both keyed by dotted layer names."""
    weights: Dict[str, np.ndarray]
    buffers: Dict[str, np.ndarray] = Field(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            weights={k: v.copy() for k, v in self.weights.items()},
            buffers={k: v.copy() for k, v in self.buffers.items()},
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in list(self.weights.values()) + list(self.buffers.values()))

    def n_parameters(self) -> int:
        return int(sum(v.size for v in self.weights.values()))


class ForwardCache(BaseModel):
    mode: ForwardMode
    layers: Dict[str, Any] = Field(default_factory=dict)
    tcn_output: Optional[np.ndarray] = None
    attention: Optional[np.ndarray] = None     # alpha [N x T x T]

    class Config:
        arbitrary_types_allowed = True
