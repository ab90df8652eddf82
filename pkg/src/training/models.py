from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator


class TrainConfig(BaseModel):
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 0.000106
    seed: int = 0
    shuffle: bool = True

    @model_validator(mode="after")
    def _check(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2 for batch normalization, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        return self


class AdamState(BaseModel):
    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    class Config:
        arbitrary_types_allowed = True


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: Optional[float] = None
    val_accuracy: Optional[float] = None

    @model_validator(mode="after")
    def _check(self):
        for loss in (self.train_loss, self.val_loss):
            if loss is not None and loss < 0:
                raise ValueError(f"Loss must be non-negative, got {loss}")
        for acc in (self.train_accuracy, self.val_accuracy):
            if acc is not None and not 0.0 <= acc <= 1.0:
                raise ValueError(f"Accuracy must lie in [0, 1], got {acc}")
        return self
