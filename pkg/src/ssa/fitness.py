import json
import math
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

from network.models import NetworkConfig
from plant_data.models import PreparedDataset
from training.models import TrainConfig
from training.services import evaluate, train_on_dataset
from utils.config import FITNESS_CACHE_TTL, REDIS_URL
from utils.seeding import derive_seed, stable_hash
from .constants import FITNESS_CACHE_PREFIX, FITNESS_CACHE_VERSION
from .models import Dimension, SearchSpace, TuneSettings

try:
    from redis import Redis
except Exception:
    Redis = None  # Redis is optional

logger = logging.getLogger(__name__)

Assignment = Dict[str, Any]


def canonical_assignment(assignment: Assignment) -> str:
    return json.dumps(assignment, sort_keys=True)


# ===============================================================================
# Fitness functions (higher is better)
# ===============================================================================

class FitnessFunction(ABC):
    """A total function from decoded assignments to a real score."""

    @abstractmethod
    def __call__(self, assignment: Assignment) -> float:
        pass

    def cache_context(self) -> str:
        """Everything besides the assignment that the score depends on."""
        return type(self).__name__


class SphereFitness(FitnessFunction):
    """Negative sphere function; maximum 0 at the origin."""

    def __call__(self, assignment: Assignment) -> float:
        return -float(sum(float(v) ** 2 for v in assignment.values()))


class ConstantFitness(FitnessFunction):
    def __init__(self, value: float = 0.5):
        self.value = value

    def __call__(self, assignment: Assignment) -> float:
        return self.value

    def cache_context(self) -> str:
        return f"constant:{self.value}"


def sphere_space(n_dims: int = 5, bound: float = 1.0) -> SearchSpace:
    return SearchSpace(dimensions=[
        Dimension(name=f"x{i}", kind="continuous", low=-bound, high=bound) for i in range(n_dims)
    ])


def assignment_to_configs(assignment: Assignment, dataset: PreparedDataset, settings: TuneSettings,
                          seed: int) -> Tuple[NetworkConfig, TrainConfig]:
    net = NetworkConfig.variant(
        settings.variant.value,
        n_vars=dataset.n_vars,
        window_width=dataset.width,
        tcn_channels=int(assignment["conv_channels"]),
        tcn_kernel_size=int(assignment["kernel_size"]),
        tcn_dilations=settings.tcn_dilations,
        dropout_rate=float(assignment["dropout_rate"]),
        attention_dim=settings.attention_dim,
    )
    train = TrainConfig(
        epochs=settings.epochs,
        batch_size=int(assignment["batch_size"]),
        learning_rate=float(assignment["learning_rate"]),
        seed=seed,
    )
    return net, train


class ETCNFitness(FitnessFunction):
    """
    Trains a fresh network with the assignment's hyperparameters and scores
    its accuracy on the fitness split (validation by default).

    The training seed is derived from the assignment itself, so the score is a
    pure function of the assignment and can be cached.
    """

    def __init__(self, dataset: PreparedDataset, settings: TuneSettings):
        self.dataset = dataset
        self.settings = settings
        if not dataset.split.subset(settings.fitness_split):
            raise ValueError(f"Fitness split {settings.fitness_split!r} is empty")

    def seed_for(self, assignment: Assignment) -> int:
        return derive_seed(self.settings.seed, "fitness", stable_hash(canonical_assignment(assignment)))

    def __call__(self, assignment: Assignment) -> float:
        net, train = assignment_to_configs(assignment, self.dataset, self.settings, self.seed_for(assignment))
        model, _ = train_on_dataset(self.dataset, net, train)
        _, accuracy = evaluate(model, self.dataset.split.subset(self.settings.fitness_split))
        logger.info(f"[SSA] fitness={accuracy:.4f} assignment={canonical_assignment(assignment)}")
        return accuracy

    def cache_context(self) -> str:
        return "|".join([
            "etcn",
            self.dataset.fingerprint(),
            self.settings.model_dump_json(),
        ])


# ===============================================================================
# Fitness cache: in-process dict, plus Redis when REDIS_URL is set
# ===============================================================================

_redis = None


def _redis_client(url: Optional[str]):
    global _redis
    if _redis is None and url and Redis is not None:
        try:
            logger.info(f"[SSA][CACHE] Attempting Redis connection to: {url}")
            _redis = Redis.from_url(url)
            _redis.ping()
            logger.info("[SSA][CACHE] Redis connected successfully")
        except Exception as e:
            logger.error(f"[SSA][CACHE] Redis connection failed: {e}")
            _redis = None
    elif _redis is None and not url:
        logger.debug("[SSA][CACHE] REDIS_URL not set - using in-process cache only")
    return _redis


class FitnessCache:
    def __init__(self, context: str, redis_url: Optional[str] = REDIS_URL, ttl: int = FITNESS_CACHE_TTL):
        self.context = context
        self.ttl = ttl
        self._local: Dict[str, float] = {}
        self._redis = _redis_client(redis_url)

    def key(self, assignment: Assignment) -> str:
        digest = stable_hash(f"{self.context}|{canonical_assignment(assignment)}")
        return f"{FITNESS_CACHE_PREFIX}:{digest}:{FITNESS_CACHE_VERSION}"

    def get(self, assignment: Assignment) -> Optional[float]:
        key = self.key(assignment)
        if key in self._local:
            logger.debug(f"[SSA][CACHE] HIT key={key}")
            return self._local[key]
        if self._redis is None:
            return None
        try:
            raw = self._redis.get(key)
        except Exception as e:
            logger.error(f"[SSA][CACHE] get failed key={key} error={e}")
            return None
        if raw is None:
            logger.debug(f"[SSA][CACHE] MISS key={key}")
            return None
        value = float(raw)
        self._local[key] = value
        logger.debug(f"[SSA][CACHE] HIT key={key} (redis)")
        return value

    def set(self, assignment: Assignment, value: float) -> None:
        key = self.key(assignment)
        self._local[key] = value
        if self._redis is None:
            return
        try:
            self._redis.setex(key, self.ttl, repr(value))
            logger.debug(f"[SSA][CACHE] SET key={key} ttl={self.ttl}s")
        except Exception as e:
            logger.error(f"[SSA][CACHE] set failed key={key} error={e}")


# ===============================================================================
# Population evaluation, serial or in a process pool
# ===============================================================================

_worker_fitness: Optional[FitnessFunction] = None


def _install_fitness(fitness_fn) -> None:
    global _worker_fitness
    _worker_fitness = fitness_fn


def _safe_call(fitness_fn, assignment: Assignment) -> Tuple[Optional[float], Optional[str]]:
    try:
        value = float(fitness_fn(assignment))
    except Exception as e:
        return None, f"{type(e).__name__}: {e}"
    if not math.isfinite(value):
        return None, f"non-finite fitness {value}"
    return value, None


def _call_installed(assignment: Assignment) -> Tuple[Optional[float], Optional[str]]:
    return _safe_call(_worker_fitness, assignment)


class PopulationEvaluator:
    """
    Scores a batch of assignments. Results come back in input order; a failed
    evaluation yields None. Identical assignments in one batch are scored once.
    """

    def __init__(self, fitness_fn, cache: Optional[FitnessCache] = None, jobs: int = 1):
        if jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {jobs}")
        self.fitness_fn = fitness_fn
        self.cache = cache
        self.jobs = jobs
        self._pool: Optional[ProcessPoolExecutor] = None

    def __enter__(self) -> "PopulationEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _compute(self, assignments: List[Assignment]) -> List[Tuple[Optional[float], Optional[str]]]:
        if self.jobs == 1 or len(assignments) == 1:
            return [_safe_call(self.fitness_fn, a) for a in assignments]
        if self._pool is None:
            self._pool = ProcessPoolExecutor(
                max_workers=self.jobs, initializer=_install_fitness, initargs=(self.fitness_fn,),
            )
        return list(self._pool.map(_call_installed, assignments))

    def evaluate(self, assignments: List[Assignment]) -> List[Optional[float]]:
        results: Dict[str, Optional[float]] = {}
        pending: Dict[str, Assignment] = {}
        for assignment in assignments:
            key = canonical_assignment(assignment)
            if key in results or key in pending:
                continue
            cached = self.cache.get(assignment) if self.cache is not None else None
            if cached is not None:
                results[key] = cached
            else:
                pending[key] = assignment

        for (key, assignment), (value, error) in zip(pending.items(), self._compute(list(pending.values()))):
            if error is not None:
                logger.warning(f"[SSA] Fitness evaluation failed assignment={key} error={error}")
            elif self.cache is not None:
                self.cache.set(assignment, value)
            results[key] = value

        return [results[canonical_assignment(a)] for a in assignments]
