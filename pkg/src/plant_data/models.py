import hashlib
import json
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from utils.config import split_csv_list
from utils.seeding import stable_hash
from .constants import (
    ACCIDENT_CLASSES,
    DEFAULT_N_SEVERITIES,
    DEFAULT_N_STEPS,
    DEFAULT_N_VARS,
    DEFAULT_ONSET_STEP,
    SAMPLE_PERIOD_S,
    SEVERITY_MAX,
    SEVERITY_MIN,
    FaultClass,
)

# ===============================================================================
# Scenario and series models
# ===============================================================================

class ScenarioSpec(BaseModel):
    class_id: FaultClass
    severity: float = 0.0
    onset_step: int = DEFAULT_ONSET_STEP
    seed: int = 0
    severity_index: Optional[int] = None
    repetition: int = 0

    @field_validator("class_id", mode="before")
    @classmethod
    def _coerce_class(cls, value):
        if isinstance(value, str) and not value.strip().isdigit():
            return FaultClass.from_name(value)
        return value

    @model_validator(mode="after")
    def _check_severity(self):
        # Steady state ignores severity
        if self.class_id != FaultClass.NO and not (SEVERITY_MIN - 1e-12 <= self.severity <= SEVERITY_MAX + 1e-12):
            raise ValueError(f"severity {self.severity} outside [{SEVERITY_MIN}, {SEVERITY_MAX}]")
        if self.onset_step < 0:
            raise ValueError(f"onset_step must be non-negative, got {self.onset_step}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        return self


class TimeSeries(BaseModel):
    values: np.ndarray            # [n_vars x n_steps]
    labels: np.ndarray            # [n_steps]
    sample_period: float = SAMPLE_PERIOD_S
    scenario: ScenarioSpec

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.values.ndim != 2:
            raise ValueError(f"values must be 2-D [n_vars x n_steps], got shape {self.values.shape}")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.values.shape[1]:
            raise ValueError(f"labels shape {self.labels.shape} does not match n_steps={self.values.shape[1]}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values contain NaN or Inf")
        return self

    @property
    def n_vars(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]


class GeneratorConfig(BaseModel):
    classes: List[FaultClass] = Field(default_factory=lambda: list(ACCIDENT_CLASSES))
    n_severities: int = DEFAULT_N_SEVERITIES
    severity_min: float = SEVERITY_MIN
    severity_max: float = SEVERITY_MAX
    repetitions: int = 1
    steady_runs: int = 3
    n_vars: int = DEFAULT_N_VARS
    n_steps: int = DEFAULT_N_STEPS
    onset_step: int = DEFAULT_ONSET_STEP
    seed: int = 0

    @field_validator("classes", mode="before")
    @classmethod
    def _parse_classes(cls, value):
        items = split_csv_list(value)
        parsed = []
        for item in items:
            if isinstance(item, str) and not item.isdigit():
                fault = FaultClass.from_name(item)
            else:
                fault = FaultClass(int(item))
            # NO is driven by steady_runs
            if fault != FaultClass.NO:
                parsed.append(fault)
        return parsed

    @model_validator(mode="after")
    def _check(self):
        if self.n_vars <= 0 or self.n_steps <= 0:
            raise ValueError("n_vars and n_steps must be positive")
        if self.onset_step >= self.n_steps:
            raise ValueError(f"onset_step {self.onset_step} must be < n_steps {self.n_steps}")
        if self.n_severities < 1 or self.repetitions < 1 or self.steady_runs < 0:
            raise ValueError("n_severities and repetitions must be >= 1, steady_runs >= 0")
        if not (SEVERITY_MIN <= self.severity_min <= self.severity_max <= SEVERITY_MAX):
            raise ValueError(f"severity grid must lie in [{SEVERITY_MIN}, {SEVERITY_MAX}]")
        return self

    def severity_grid(self) -> List[float]:
        if self.n_severities == 1:
            return [float(self.severity_max)]
        return [float(s) for s in np.linspace(self.severity_min, self.severity_max, self.n_severities)]


# ===============================================================================
# Preprocessing models
# ===============================================================================

class NormalizerStats(BaseModel):
    x_min: List[float]
    x_max: List[float]

    @model_validator(mode="after")
    def _check(self):
        if len(self.x_min) != len(self.x_max):
            raise ValueError("x_min and x_max must have the same length")
        if any(hi < lo for lo, hi in zip(self.x_min, self.x_max)):
            raise ValueError("x_max must be >= x_min for every variable")
        return self

    @property
    def n_vars(self) -> int:
        return len(self.x_min)

    def arrays(self):
        return np.asarray(self.x_min, dtype=float), np.asarray(self.x_max, dtype=float)


class WindowedSample(BaseModel):
    window: np.ndarray            # [n_vars x width]
    label: int
    source_time: int              # index of the window endpoint in the source series
    series_index: int = 0
    start: int = 0

    class Config:
        arbitrary_types_allowed = True


class DatasetSplit(BaseModel):
    train: List[WindowedSample] = Field(default_factory=list)
    validation: List[WindowedSample] = Field(default_factory=list)
    test: List[WindowedSample] = Field(default_factory=list)

    def subset(self, name: str) -> List[WindowedSample]:
        if name not in ("train", "validation", "test"):
            raise ValueError(f"Unknown split {name!r}")
        return getattr(self, name)

    def counts(self) -> Dict[str, int]:
        return {"train": len(self.train), "validation": len(self.validation), "test": len(self.test)}


class WindowStats(BaseModel):
    width: int
    variables: List[int]
    mean: np.ndarray              # [n_selected x n_windows]
    variance: np.ndarray
    std: np.ndarray

    class Config:
        arbitrary_types_allowed = True


class PreparedDataset(BaseModel):
    """Normalized series plus the split; every window is a view into `series`."""
    series: List[TimeSeries]
    normalizer: NormalizerStats
    split: DatasetSplit
    width: int
    step: int
    noise_fraction: float
    split_ratios: List[float]
    seed: int

    @property
    def n_vars(self) -> int:
        return self.normalizer.n_vars

    def membership(self) -> Dict[str, np.ndarray]:
        """(series_index, start) pairs per split, as int64 arrays of shape [k x 2]."""
        out = {}
        for name in ("train", "validation", "test"):
            rows = [(s.series_index, s.start) for s in self.split.subset(name)]
            out[name] = np.asarray(rows, dtype=np.int64).reshape(-1, 2)
        return out

    def fingerprint(self) -> str:
        """Stable hash of the series contents, preprocessing settings and split membership."""
        digest = hashlib.md5()
        for ts in self.series:
            digest.update(np.ascontiguousarray(ts.values, dtype=np.float64).tobytes())
            digest.update(np.ascontiguousarray(ts.labels, dtype=np.int64).tobytes())
        parts = [
            f"w={self.width}", f"s={self.step}", f"noise={self.noise_fraction!r}",
            "norm=" + json.dumps(self.normalizer.model_dump(), sort_keys=True),
            f"values={digest.hexdigest()}",
        ]
        for name, rows in self.membership().items():
            parts.append(f"{name}:" + ",".join(f"{a}.{b}" for a, b in rows.tolist()))
        return stable_hash("|".join(parts))
