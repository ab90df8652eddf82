import logging
from pathlib import Path
from typing import List, Optional

import pandas as pd
from pydantic import BaseModel

from network.models import NetworkConfig
from plant_data.models import PreparedDataset
from training.models import TrainConfig
from utils.config import write_config_file
from utils.plotting import plot_lines
from utils.seeding import derive_seed
from utils.serialization import atomic_write_text, write_json
from .fitness import ETCNFitness, FitnessCache, PopulationEvaluator, assignment_to_configs
from .models import HistoryRow, SearchSpace, SSAConfig, SSAResult, TuneSettings
from .optimizer import optimize

logger = logging.getLogger(__name__)

CONVERGENCE_COLUMNS = ["iteration", "best_fitness", "mean_fitness"]


class TuneResult(BaseModel):
    search: SSAResult
    network: NetworkConfig
    training: TrainConfig


def tune_etcn(dataset: PreparedDataset, ssa_config: SSAConfig, settings: TuneSettings,
              space: Optional[SearchSpace] = None, jobs: int = 1, use_cache: bool = True) -> TuneResult:
    """
    Sparrow search over the hyperparameter space, scoring each assignment by
    training a network and measuring accuracy on the fitness split.
    """
    space = space or SearchSpace.default()
    fitness = ETCNFitness(dataset, settings)
    cache = FitnessCache(fitness.cache_context()) if use_cache else None
    logger.info(f"[SSA] Tuning population={ssa_config.population} iterations={ssa_config.max_iterations} "
                f"fitness_split={settings.fitness_split} jobs={jobs}")

    with PopulationEvaluator(fitness, cache, jobs) as evaluator:
        result = optimize(space, fitness, ssa_config, evaluator)

    # The final model is re-trained from scratch with the tuning seed
    network, training = assignment_to_configs(
        result.best_assignment, dataset, settings, derive_seed(settings.seed, "final"),
    )
    logger.info(f"[SSA] Best fitness={result.best_fitness:.4f} assignment={result.best_assignment}")
    return TuneResult(search=result, network=network, training=training)


# ===============================================================================
# Artifacts
# ===============================================================================

def write_convergence_csv(path: Path, history: List[HistoryRow]) -> Path:
    frame = pd.DataFrame([r.model_dump() for r in history], columns=CONVERGENCE_COLUMNS)
    atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))
    return Path(path)


def plot_convergence(path: Path, history: List[HistoryRow]) -> Path:
    iterations = [r.iteration for r in history]
    return plot_lines(path, iterations, {
        "best": [r.best_fitness for r in history],
        "mean": [r.mean_fitness for r in history],
    }, "Sparrow search convergence", "iteration", "fitness")


def write_best_report(out_dir: Path, result: SSAResult, tuned: Optional[TuneResult] = None,
                      fitness_split: Optional[str] = None) -> List[Path]:
    """best_assignment.json, plus network.cfg / train.cfg ready for `train --config` when tuned."""
    out_dir = Path(out_dir)
    report = {
        "best_assignment": result.best_assignment,
        "best_fitness": result.best_fitness,
        "evaluations": result.evaluations,
        "failures": result.failures,
        "iterations": len(result.history) - 1,
        "fitness_split": fitness_split,
    }
    paths = [out_dir / "best_assignment.json"]
    write_json(paths[0], report)
    if tuned is not None:
        write_config_file(out_dir / "network.cfg", tuned.network.model_dump(mode="json"))
        write_config_file(out_dir / "train.cfg", tuned.training.model_dump(mode="json"))
        paths += [out_dir / "network.cfg", out_dir / "train.cfg"]
    return paths
