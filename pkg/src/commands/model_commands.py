"""
Model Commands

- train: fit one network on a dataset, write checkpoint and epoch curves
- evaluate: score a checkpoint on a dataset split (metrics + confusion matrices)
- ablate: train/test every requested model variant several times on one split
"""

import logging
from pathlib import Path
from typing import List

from evaluation.reports import write_ablation_csv, write_evaluation
from evaluation.services import ablation_table, evaluate_model, run_ablation
from network.checkpoint import check_compatible, load_checkpoint, save_checkpoint
from network.constants import ModelVariant
from plant_data.storage import load_dataset
from training.models import TrainConfig
from training.services import plot_curves, train_on_dataset, write_curves_csv
from utils.config import split_csv_list
from .dependencies import (
    JOBS_ARG,
    NETWORK_ARGS,
    NETWORK_FIELDS,
    PLOT_ARG,
    as_strings,
    merged_config,
    network_config_for,
    out_arg,
    overrides,
    resolve_out_dir,
)
from .manifest import CommandResult
from .registry import CommandRouter, arg

router = CommandRouter(tags=["model"])
logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "model.ckpt"
CURVES_FILE = "curves.csv"
ABLATION_FILE = "ablation.csv"
TRAIN_FIELDS = ["epochs", "batch_size", "learning_rate", "seed"]
VARIANT_NAMES = [v.value for v in ModelVariant]

TRAIN_ARGS = [
    arg("--epochs", type=int),
    arg("--batch-size", dest="batch_size", type=int),
    arg("--learning-rate", dest="learning_rate", type=float),
    arg("--seed", type=int, help="Training seed (default 0, or the train config's seed)"),
]


def write_training_outputs(out_dir: Path, model, dataset, records, train_config: TrainConfig, plot: bool) -> List[Path]:
    """Checkpoint, curve CSV and optional curve plots for a trained model."""
    paths = [
        save_checkpoint(out_dir / CHECKPOINT_FILE, model, dataset.normalizer, dataset.width, dataset.step, extra={
            "dataset_fingerprint": dataset.fingerprint(),
            "train_config": train_config.model_dump(mode="json"),
        }),
        write_curves_csv(out_dir / CURVES_FILE, records),
    ]
    if plot:
        paths += plot_curves(out_dir, records)
    return paths


@router.command("train", help="Train a network on a windowed dataset", arguments=[
    arg("dataset", type=Path, help="Dataset file written by `preprocess`"),
    arg("--config", type=Path, help="key=value network config file"),
    arg("--train-config", dest="train_config", type=Path, help="key=value training config file"),
    arg("--variant", choices=VARIANT_NAMES, help="Named model composition (default: as in --config, else etcn)"),
    *NETWORK_ARGS,
    *TRAIN_ARGS,
    PLOT_ARG,
    out_arg("train"),
])
def train(args, app) -> CommandResult:
    dataset = load_dataset(args.dataset)
    net_values = merged_config(args.config, overrides(args, NETWORK_FIELDS))
    net_config = network_config_for(dataset, net_values, args.variant)
    train_config = TrainConfig(**merged_config(args.train_config, overrides(args, TRAIN_FIELDS)))

    model, records = train_on_dataset(dataset, net_config, train_config)
    out_dir = resolve_out_dir(args, "train")
    paths = write_training_outputs(out_dir, model, dataset, records, train_config, args.plot)

    final = records[-1]
    return CommandResult(
        out_dir=out_dir,
        config={"network": net_config.model_dump(mode="json"), "training": train_config.model_dump(mode="json")},
        seed=train_config.seed,
        inputs=as_strings([p for p in (args.dataset, args.config, args.train_config) if p]),
        outputs=as_strings(paths),
        summary={
            "variant": net_config.variant_name,
            "parameters": model.params.n_parameters(),
            "final_train_accuracy": final.train_accuracy,
            "final_val_accuracy": final.val_accuracy,
        },
    )


@router.command("evaluate", help="Metrics and confusion matrix of a checkpoint on one split", arguments=[
    arg("checkpoint", type=Path, help="Checkpoint written by `train`"),
    arg("dataset", type=Path, help="Dataset file written by `preprocess`"),
    arg("--split", choices=["train", "validation", "test"], default="test"),
    out_arg("evaluate"),
])
def evaluate(args, app) -> CommandResult:
    model, header = load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.dataset)
    check_compatible(header, dataset)

    cm, report = evaluate_model(model, dataset.split.subset(args.split))
    out_dir = resolve_out_dir(args, "evaluate")
    paths = write_evaluation(out_dir, cm, report, prefix=args.split)
    logger.info(f"[EVAL] split={args.split} accuracy={report.accuracy:.4f} macro_f1={report.macro_f1:.4f}")
    return CommandResult(
        out_dir=out_dir,
        config={"split": args.split},
        inputs=[str(args.checkpoint), str(args.dataset)],
        outputs=as_strings(paths),
        summary={"accuracy": report.accuracy, "macro_f1": report.macro_f1, "samples": cm.total},
    )


@router.command("ablate", help="Compare model variants over repeated runs on one split", arguments=[
    arg("dataset", type=Path, help="Dataset file written by `preprocess`"),
    arg("--variants", type=str, default=",".join(VARIANT_NAMES), help="Comma-separated variant names"),
    arg("--runs", type=int, default=5, help="Independent runs per variant"),
    *NETWORK_ARGS,
    *TRAIN_ARGS,
    JOBS_ARG,
    out_arg("ablate"),
])
def ablate(args, app) -> CommandResult:
    variants = split_csv_list(args.variants)
    unknown = [v for v in variants if v not in VARIANT_NAMES]
    if not variants or unknown:
        raise ValueError(f"Unknown variant(s) {unknown or variants}; expected names from {VARIANT_NAMES}")

    dataset = load_dataset(args.dataset)
    net_overrides = overrides(args, NETWORK_FIELDS)
    # Validates the overrides once before any worker starts
    network_config_for(dataset, net_overrides)
    train_config = TrainConfig(**overrides(args, TRAIN_FIELDS))

    results = run_ablation(dataset, variants, args.runs, train_config, net_overrides, args.jobs)
    rows = ablation_table(results)
    out_dir = resolve_out_dir(args, "ablate")
    path = write_ablation_csv(out_dir / ABLATION_FILE, rows)
    return CommandResult(
        out_dir=out_dir,
        config={"variants": variants, "runs": args.runs, "network_overrides": net_overrides,
                "training": train_config.model_dump(mode="json")},
        seed=train_config.seed,
        inputs=[str(args.dataset)],
        outputs=[str(path)],
        summary={r.variant: {"accuracy_mean": r.accuracy_mean, "accuracy_std": r.accuracy_std} for r in rows},
    )
