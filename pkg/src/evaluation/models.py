from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator


class ConfusionMatrix(BaseModel):
    """counts[i, j] = number of samples of true class i predicted as class j."""
    counts: np.ndarray
    class_names: Optional[List[str]] = None

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check(self):
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError(f"Confusion matrix must be square, got shape {self.counts.shape}")
        if np.any(self.counts < 0):
            raise ValueError("Confusion matrix entries must be non-negative")
        if self.class_names is not None and len(self.class_names) != self.counts.shape[0]:
            raise ValueError("class_names length does not match the matrix")
        return self

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def names(self) -> List[str]:
        return self.class_names or [str(i) for i in range(self.n_classes)]

    def normalized(self) -> np.ndarray:
        """Row-stochastic version; rows without samples stay zero."""
        rows = self.counts.sum(axis=1, keepdims=True).astype(float)
        return np.divide(self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)


class ClassMetrics(BaseModel):
    name: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: bool = False


class MetricsReport(BaseModel):
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    per_class: List[ClassMetrics]
    # Macro means over the non-degenerate classes only
    macro_excluding_degenerate: Dict[str, float] = Field(default_factory=dict)

    @property
    def degenerate_classes(self) -> List[str]:
        return [c.name for c in self.per_class if c.degenerate]


class VariantResult(BaseModel):
    variant: str
    run: int
    split_fingerprint: str
    report: MetricsReport


class AblationRow(BaseModel):
    variant: str
    runs: int
    accuracy_mean: float
    accuracy_std: float
    precision_mean: float
    precision_std: float
    recall_mean: float
    recall_std: float
    f1_mean: float
    f1_std: float
