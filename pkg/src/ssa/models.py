import math
import re
from decimal import Decimal
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from network.constants import DEFAULT_ATTENTION_DIM, DEFAULT_DILATIONS, ModelVariant
from .constants import (
    DEFAULT_DANGER_FRACTION,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_POPULATION,
    DEFAULT_PRODUCER_FRACTION,
    DEFAULT_SAFETY_THRESHOLD,
    DEFAULT_SEARCH_RANGES,
    DimensionKind,
    SparrowRole,
)

Number = Union[int, float]

_GRID = re.compile(r"^\[\s*([^:\]]+)\s*:\s*([^:\]]+)\s*:\s*([^:\]]+)\s*\]$")
_SET = re.compile(r"^\{(.+)\}$")


def _parse_number(text: str) -> Number:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def _decimals(step: float) -> int:
    return max(0, -Decimal(repr(float(step))).normalize().as_tuple().exponent)


# ===============================================================================
# Search space
# ===============================================================================

class Dimension(BaseModel):
    """
    One hyperparameter. Continuous dims map u in [0, 1] affinely onto [low, high]
    and snap to the step grid; integer-grid and categorical dims split [0, 1]
    into len(options) equal buckets.
    """
    name: str
    kind: DimensionKind
    low: Optional[float] = None
    high: Optional[float] = None
    step: Optional[float] = None
    options: Optional[List[Any]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == DimensionKind.CONTINUOUS:
            if self.low is None or self.high is None or self.high < self.low:
                raise ValueError(f"{self.name}: continuous dims need low <= high")
            if self.step is not None and self.step <= 0:
                raise ValueError(f"{self.name}: grid step must be positive, got {self.step}")
        elif not self.options:
            raise ValueError(f"{self.name}: {self.kind.value} dims need a non-empty option list")
        return self

    @classmethod
    def from_range_notation(cls, name: str, text: str) -> "Dimension":
        """
        "[a:n:b]" is the grid from a to b in steps of n (integer-grid when all
        three are integers, continuous otherwise); "{x,y,z}" lists categorical options.
        """
        grid = _GRID.match(text.strip())
        if grid:
            low, step, high = (_parse_number(g) for g in grid.groups())
            if all(isinstance(v, int) for v in (low, step, high)):
                if step <= 0 or high < low:
                    raise ValueError(f"{name}: invalid integer grid {text!r}")
                return cls(name=name, kind=DimensionKind.INTEGER, options=list(range(low, high + 1, step)))
            return cls(name=name, kind=DimensionKind.CONTINUOUS, low=float(low), high=float(high), step=float(step))
        options = _SET.match(text.strip())
        if options:
            return cls(name=name, kind=DimensionKind.CATEGORICAL,
                       options=[_parse_number(o) for o in options.group(1).split(",") if o.strip()])
        raise ValueError(f"{name}: cannot parse range notation {text!r}")

    @property
    def size(self) -> float:
        """Number of distinct decoded values (inf for an unsnapped continuous range)."""
        if self.kind != DimensionKind.CONTINUOUS:
            return len(self.options)
        if self.high == self.low:
            return 1
        if self.step is None:
            return math.inf
        return self._max_index() + 1

    def _max_index(self) -> int:
        return int(math.floor((self.high - self.low) / self.step + 1e-9))

    def decode(self, u: float) -> Any:
        u = min(max(float(u), 0.0), 1.0)
        if self.kind != DimensionKind.CONTINUOUS:
            n = len(self.options)
            return self.options[min(int(math.floor(u * n)), n - 1)]
        if self.step is None:
            return self.low + u * (self.high - self.low)
        index = min(int(round(u * (self.high - self.low) / self.step)), self._max_index())
        return round(self.low + index * self.step, _decimals(self.step))

    def encode(self, value: Any) -> float:
        """A unit-interval coordinate that decodes to `value`."""
        if self.kind != DimensionKind.CONTINUOUS:
            if value not in self.options:
                raise ValueError(f"{self.name}: {value!r} is not one of {self.options}")
            return (self.options.index(value) + 0.5) / len(self.options)
        value = float(value)
        if not self.low - 1e-12 <= value <= self.high + 1e-12:
            raise ValueError(f"{self.name}: {value} outside [{self.low}, {self.high}]")
        if self.high == self.low:
            return 0.0
        return (value - self.low) / (self.high - self.low)


class SearchSpace(BaseModel):
    dimensions: List[Dimension]

    @model_validator(mode="after")
    def _check(self):
        if not self.dimensions:
            raise ValueError("Search space needs at least one dimension")
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate dimension names in {names}")
        return self

    @classmethod
    def from_ranges(cls, ranges: Dict[str, str]) -> "SearchSpace":
        return cls(dimensions=[Dimension.from_range_notation(name, text) for name, text in ranges.items()])

    @classmethod
    def default(cls) -> "SearchSpace":
        return cls.from_ranges(DEFAULT_SEARCH_RANGES)

    @property
    def names(self) -> List[str]:
        return [d.name for d in self.dimensions]

    def __len__(self) -> int:
        return len(self.dimensions)

    def is_singleton(self) -> bool:
        return all(d.size == 1 for d in self.dimensions)

    def decode(self, position: np.ndarray) -> Dict[str, Any]:
        if len(position) != len(self.dimensions):
            raise ValueError(f"Position has {len(position)} components, space has {len(self.dimensions)}")
        return {d.name: d.decode(u) for d, u in zip(self.dimensions, position)}

    def encode(self, assignment: Dict[str, Any]) -> np.ndarray:
        missing = set(self.names) - set(assignment)
        if missing:
            raise ValueError(f"Assignment is missing {sorted(missing)}")
        return np.array([d.encode(assignment[d.name]) for d in self.dimensions])

    def contains(self, assignment: Dict[str, Any]) -> bool:
        try:
            return self.decode(self.encode(assignment)) == {k: assignment[k] for k in self.names}
        except ValueError:
            return False


# ===============================================================================
# Optimizer state and results
# ===============================================================================

class Sparrow(BaseModel):
    """Best position a sparrow has found so far and the fitness evaluated there."""
    position: np.ndarray
    fitness: float = -math.inf
    role: SparrowRole = SparrowRole.SCROUNGER
    failed: bool = False

    class Config:
        arbitrary_types_allowed = True


class SSAConfig(BaseModel):
    population: int = DEFAULT_POPULATION
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    producer_fraction: float = DEFAULT_PRODUCER_FRACTION
    danger_aware_fraction: float = DEFAULT_DANGER_FRACTION
    safety_threshold: float = DEFAULT_SAFETY_THRESHOLD
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if self.population < 1 or self.max_iterations < 1:
            raise ValueError("population and max_iterations must be >= 1")
        for name in ("producer_fraction", "danger_aware_fraction"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if not 0.5 <= self.safety_threshold <= 1.0:
            raise ValueError(f"safety_threshold must lie in [0.5, 1], got {self.safety_threshold}")
        return self

    @property
    def n_producers(self) -> int:
        return min(self.population, max(1, int(round(self.producer_fraction * self.population))))

    @property
    def n_danger_aware(self) -> int:
        return min(self.population, int(round(self.danger_aware_fraction * self.population)))


class HistoryRow(BaseModel):
    iteration: int
    best_fitness: float
    mean_fitness: float


class SSAResult(BaseModel):
    best_assignment: Dict[str, Any]
    best_fitness: float
    best_position: List[float]
    history: List[HistoryRow] = Field(default_factory=list)
    population: List[Sparrow] = Field(default_factory=list)
    evaluations: int = 0
    failures: int = 0


class TuneSettings(BaseModel):
    """Settings held fixed while the search varies the hyperparameters."""
    epochs: int = 100
    variant: ModelVariant = ModelVariant.ETCN
    tcn_dilations: List[int] = Field(default_factory=lambda: list(DEFAULT_DILATIONS))
    attention_dim: int = DEFAULT_ATTENTION_DIM
    fitness_on_test: bool = False
    seed: int = 0

    @property
    def fitness_split(self) -> str:
        return "test" if self.fitness_on_test else "validation"
