from enum import Enum


class DimensionKind(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer-grid"
    CATEGORICAL = "categorical"


class SparrowRole(str, Enum):
    PRODUCER = "producer"
    SCROUNGER = "scrounger"
    DANGER_AWARE = "danger_aware"


class MockFitness(str, Enum):
    SPHERE = "sphere"
    CONSTANT = "constant"


DEFAULT_POPULATION = 20
DEFAULT_MAX_ITERATIONS = 20
DEFAULT_PRODUCER_FRACTION = 0.2
DEFAULT_DANGER_FRACTION = 0.1
DEFAULT_SAFETY_THRESHOLD = 0.8

# Guards the danger-aware step against a zero fitness gap
DANGER_EPS = 1e-50

# Hyperparameter search ranges, "[a:n:b]" = from a to b in steps of n
DEFAULT_SEARCH_RANGES = {
    "learning_rate": "[0.000001:0.000001:0.01]",
    "kernel_size": "[3:1:12]",
    "dropout_rate": "[0.1:0.001:0.5]",
    "conv_channels": "{4,8,16,32,64}",
    "batch_size": "{32,64,128,256}",
}

# Best assignment reported for the plant data
REFERENCE_OPTIMUM = {
    "learning_rate": 0.000106,
    "kernel_size": 5,
    "dropout_rate": 0.289,
    "conv_channels": 32,
    "batch_size": 128,
}

FITNESS_CACHE_PREFIX = "ssa:fitness"
FITNESS_CACHE_VERSION = "v1"
