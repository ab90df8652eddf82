"""
Sparrow search over the unit cube.

Update rules run in the centred frame z = 2u - 1, so the producers'
contracting move pulls toward the middle of every range. Each sparrow
remembers the best position it has evaluated; ranking and all moves use
those remembered positions, and a trial only replaces the memory when it
scores higher.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from utils.seeding import derive_rng
from .constants import DANGER_EPS, SparrowRole
from .fitness import Assignment, PopulationEvaluator
from .models import HistoryRow, SearchSpace, Sparrow, SSAConfig, SSAResult

logger = logging.getLogger(__name__)


def _to_unit(z: np.ndarray) -> np.ndarray:
    return (np.clip(z, -1.0, 1.0) + 1.0) / 2.0


def _finite_mean(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.mean()) if finite.size else -math.inf


class _Swarm:
    """Memory of the population plus the global best."""

    def __init__(self, space: SearchSpace, evaluator: PopulationEvaluator, n: int):
        self.space = space
        self.evaluator = evaluator
        self.z = np.zeros((n, len(space)))
        self.fitness = np.full(n, -math.inf)
        self.failed = np.zeros(n, dtype=bool)
        self.best_z = self.z[0].copy()
        self.best_fitness = -math.inf
        self.evaluations = 0
        self.failures = 0

    def evaluate(self, z_rows: np.ndarray) -> List[Optional[float]]:
        assignments = [self.space.decode(_to_unit(z)) for z in z_rows]
        self.evaluations += len(assignments)
        return self.evaluator.evaluate(assignments)

    def absorb(self, indices: Sequence[int], trials: np.ndarray) -> None:
        """Evaluates trial positions and keeps each one that beats its sparrow's memory."""
        if len(indices) == 0:
            return
        for i, z, value in zip(indices, trials, self.evaluate(trials)):
            if value is None:
                self.failures += 1
                self.failed[i] = True
                continue
            self.failed[i] = False
            if value > self.fitness[i]:
                self.fitness[i] = value
                self.z[i] = z
            if value > self.best_fitness:
                self.best_fitness = value
                self.best_z = z.copy()

    def scores(self) -> np.ndarray:
        """Memory fitness with failures replaced by a finite floor."""
        finite = self.fitness[np.isfinite(self.fitness)]
        floor = (finite.min() - 1.0) if finite.size else 0.0
        return np.where(np.isfinite(self.fitness), self.fitness, floor)


def optimize(space: SearchSpace, fitness_fn: Callable[[Assignment], float], config: SSAConfig,
             evaluator: Optional[PopulationEvaluator] = None) -> SSAResult:
    """
    Maximizes fitness_fn over the space. Returns the best-ever assignment and a
    history row per iteration (row 0 is the initial population).
    """
    evaluator = evaluator or PopulationEvaluator(fitness_fn)
    rng = derive_rng(config.seed, "ssa")
    n, dim = config.population, len(space)

    if space.is_singleton():
        swarm = _Swarm(space, evaluator, 1)
        swarm.absorb([0], np.zeros((1, dim)))
        logger.info(f"[SSA] Singleton search space, best={swarm.best_fitness}")
        return _result(space, swarm, [HistoryRow(iteration=0, best_fitness=swarm.best_fitness,
                                                 mean_fitness=_finite_mean(swarm.fitness))],
                       [SparrowRole.PRODUCER])

    swarm = _Swarm(space, evaluator, n)
    swarm.absorb(range(n), rng.uniform(-1.0, 1.0, size=(n, dim)))
    history = [HistoryRow(iteration=0, best_fitness=swarm.best_fitness, mean_fitness=_finite_mean(swarm.fitness))]
    roles = np.array([SparrowRole.SCROUNGER] * n, dtype=object)
    n_prod, n_danger = config.n_producers, config.n_danger_aware
    ones = np.ones(dim)

    for iteration in range(1, config.max_iterations + 1):
        scores = swarm.scores()
        order = np.argsort(-scores, kind="stable")
        worst = order[-1]
        worst_z, worst_score = swarm.z[worst].copy(), scores[worst]
        trials = swarm.z.copy()
        roles[:] = SparrowRole.SCROUNGER

        # Producers: contract toward the centre when safe, jump when alarmed
        producers = order[:n_prod]
        alarm = rng.random()
        for rank, i in enumerate(producers, start=1):
            if alarm < config.safety_threshold:
                alpha = 1.0 - rng.random()
                trials[i] = swarm.z[i] * np.exp(-rank / (alpha * config.max_iterations))
            else:
                trials[i] = swarm.z[i] + rng.standard_normal() * ones
            roles[i] = SparrowRole.PRODUCER
        trials[producers] = np.clip(trials[producers], -1.0, 1.0)
        before = swarm.fitness[producers].copy()
        swarm.absorb(producers, trials[producers])
        improved = swarm.fitness[producers] > before
        if improved.any():
            lead = producers[int(np.argmax(np.where(improved, swarm.fitness[producers], -np.inf)))]
        else:
            lead = order[0]
        x_p = swarm.z[lead].copy()

        # Scroungers: the better half follows the lead producer, the rest fly off
        for rank, i in enumerate(order[n_prod:], start=n_prod + 1):
            if rank > n / 2:
                trials[i] = rng.standard_normal() * np.exp((worst_z - swarm.z[i]) / rank ** 2)
            else:
                signs = rng.choice([-1.0, 1.0], size=dim)
                trials[i] = x_p + (np.abs(swarm.z[i] - x_p) @ signs / dim) * ones

        # Danger-aware: a random subset reacts to the global best and worst
        scores = swarm.scores()
        best_score = np.max(scores)
        danger = rng.permutation(n)[:n_danger]
        for i in danger:
            if scores[i] < best_score:
                trials[i] = swarm.best_z + rng.standard_normal(dim) * np.abs(swarm.z[i] - swarm.best_z)
            else:
                k = rng.uniform(-1.0, 1.0)
                trials[i] = swarm.z[i] + k * np.abs(swarm.z[i] - worst_z) / ((worst_score - scores[i]) + DANGER_EPS)
            roles[i] = SparrowRole.DANGER_AWARE

        movers = np.array(sorted(set(order[n_prod:].tolist()) | set(danger.tolist())), dtype=int)
        if movers.size:
            trials[movers] = np.clip(trials[movers], -1.0, 1.0)
            swarm.absorb(movers, trials[movers])

        history.append(HistoryRow(iteration=iteration, best_fitness=swarm.best_fitness,
                                  mean_fitness=_finite_mean(swarm.fitness)))
        logger.info(f"[SSA] iteration={iteration} best={swarm.best_fitness:.6g} "
                    f"mean={history[-1].mean_fitness:.6g} evaluations={swarm.evaluations}")

    if not math.isfinite(swarm.best_fitness):
        logger.warning("[SSA] Every fitness evaluation failed; best assignment is arbitrary")
    return _result(space, swarm, history, roles)


def _result(space: SearchSpace, swarm: _Swarm, history: List[HistoryRow],
            roles: Sequence[SparrowRole]) -> SSAResult:
    best_u = _to_unit(swarm.best_z)
    return SSAResult(
        best_assignment=space.decode(best_u),
        best_fitness=swarm.best_fitness,
        best_position=best_u.tolist(),
        history=history,
        population=[
            Sparrow(position=_to_unit(z), fitness=f, role=role, failed=bool(failed))
            for z, f, role, failed in zip(swarm.z, swarm.fitness, roles, swarm.failed)
        ],
        evaluations=swarm.evaluations,
        failures=swarm.failures,
    )
