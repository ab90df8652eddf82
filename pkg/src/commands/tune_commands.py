"""
Search Commands

- tune: sparrow search over the network/training hyperparameters, scored by
  validation (or test) accuracy; `--mock-fitness` swaps in a cheap benchmark
  function so the optimizer can be exercised without training anything.
"""

import logging
from pathlib import Path
from typing import List, Optional

from network.constants import DEFAULT_ATTENTION_DIM, DEFAULT_DILATIONS, ModelVariant
from plant_data.storage import load_dataset
from ssa.constants import (
    DEFAULT_DANGER_FRACTION,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_POPULATION,
    DEFAULT_PRODUCER_FRACTION,
    DEFAULT_SAFETY_THRESHOLD,
    DEFAULT_SEARCH_RANGES,
    MockFitness,
)
from ssa.fitness import ConstantFitness, PopulationEvaluator, SphereFitness, sphere_space
from ssa.models import SearchSpace, SSAConfig, TuneSettings
from ssa.optimizer import optimize
from ssa.services import plot_convergence, tune_etcn, write_best_report, write_convergence_csv
from training.services import train_on_dataset
from utils.config import parse_int_list, read_config_file
from .dependencies import JOBS_ARG, PLOT_ARG, SEED_ARG, as_strings, out_arg, resolve_out_dir
from .manifest import CommandResult
from .model_commands import write_training_outputs
from .registry import CommandRouter, arg

router = CommandRouter(tags=["search"])
logger = logging.getLogger(__name__)

CONVERGENCE_FILE = "convergence.csv"


def _search_space(path: Optional[Path]) -> SearchSpace:
    """Default ranges, with any dimension redefined by a key=value file of range notation."""
    ranges = dict(DEFAULT_SEARCH_RANGES)
    if path is not None:
        for name, text in read_config_file(path).items():
            if name not in ranges:
                raise ValueError(f"Unknown search dimension {name!r}; expected one of {sorted(ranges)}")
            ranges[name] = text
    return SearchSpace.from_ranges(ranges)


@router.command("tune", help="Sparrow search for the best hyperparameters", arguments=[
    arg("dataset", type=Path, nargs="?", help="Dataset file written by `preprocess` (not needed with --mock-fitness)"),
    arg("--ssa-pop", dest="population", type=int, default=DEFAULT_POPULATION),
    arg("--ssa-iters", dest="max_iterations", type=int, default=DEFAULT_MAX_ITERATIONS),
    arg("--producer-fraction", type=float, default=DEFAULT_PRODUCER_FRACTION),
    arg("--danger-fraction", type=float, default=DEFAULT_DANGER_FRACTION),
    arg("--safety-threshold", type=float, default=DEFAULT_SAFETY_THRESHOLD),
    arg("--space", type=Path, help="key=value file overriding search ranges, e.g. kernel_size=[3:1:6]"),
    arg("--fitness-on-test", action="store_true", help="Score candidates on the test split instead of validation"),
    arg("--mock-fitness", choices=[m.value for m in MockFitness], help="Benchmark fitness instead of training"),
    arg("--epochs", type=int, default=100, help="Training epochs per fitness evaluation"),
    arg("--variant", choices=[v.value for v in ModelVariant], default=ModelVariant.ETCN.value),
    arg("--dilations", type=str, default=",".join(str(d) for d in DEFAULT_DILATIONS)),
    arg("--attention-dim", type=int, default=DEFAULT_ATTENTION_DIM),
    arg("--no-cache", action="store_true", help="Disable the fitness cache"),
    arg("--retrain", action="store_true", help="Train and save the final model with the best hyperparameters"),
    JOBS_ARG,
    PLOT_ARG,
    SEED_ARG,
    out_arg("tune"),
])
def tune(args, app) -> CommandResult:
    ssa_config = SSAConfig(
        population=args.population,
        max_iterations=args.max_iterations,
        producer_fraction=args.producer_fraction,
        danger_aware_fraction=args.danger_fraction,
        safety_threshold=args.safety_threshold,
        seed=args.seed,
    )
    out_dir = resolve_out_dir(args, "tune")
    inputs = as_strings([p for p in (args.dataset, args.space) if p])
    config = {"ssa": ssa_config.model_dump(mode="json"), "mock_fitness": args.mock_fitness}
    paths: List[Path] = []

    if args.mock_fitness:
        if args.retrain:
            raise ValueError("--retrain needs a real fitness function, not --mock-fitness")
        if args.mock_fitness == MockFitness.SPHERE.value:
            fitness, space = SphereFitness(), sphere_space()
        else:
            fitness, space = ConstantFitness(), _search_space(args.space)
        with PopulationEvaluator(fitness, jobs=args.jobs) as evaluator:
            result = optimize(space, fitness, ssa_config, evaluator)
        paths += write_best_report(out_dir, result)
    else:
        if args.dataset is None:
            raise ValueError("tune needs a dataset file unless --mock-fitness is given")
        dataset = load_dataset(args.dataset)
        settings = TuneSettings(
            epochs=args.epochs,
            variant=args.variant,
            tcn_dilations=parse_int_list(args.dilations),
            attention_dim=args.attention_dim,
            fitness_on_test=args.fitness_on_test,
            seed=args.seed,
        )
        config["settings"] = settings.model_dump(mode="json")
        tuned = tune_etcn(dataset, ssa_config, settings, _search_space(args.space), args.jobs,
                          use_cache=not args.no_cache)
        result = tuned.search
        paths += write_best_report(out_dir, result, tuned, settings.fitness_split)
        if args.retrain:
            model, records = train_on_dataset(dataset, tuned.network, tuned.training)
            paths += write_training_outputs(out_dir, model, dataset, records, tuned.training, args.plot)

    paths.append(write_convergence_csv(out_dir / CONVERGENCE_FILE, result.history))
    if args.plot:
        paths.append(plot_convergence(out_dir / "convergence.svg", result.history))

    return CommandResult(
        out_dir=out_dir,
        config=config,
        seed=args.seed,
        inputs=inputs,
        outputs=as_strings(paths),
        summary={
            "best_assignment": result.best_assignment,
            "best_fitness": result.best_fitness,
            "evaluations": result.evaluations,
            "failures": result.failures,
        },
    )
