import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from network.etcn import ETCNModel, check_receptive_field, network_loss
from network.models import NetworkConfig, NetworkParams
from plant_data.models import DatasetSplit, PreparedDataset, WindowedSample
from plant_data.services import stack_windows
from utils.plotting import plot_lines
from utils.seeding import derive_rng, derive_seed
from utils.serialization import atomic_write_text
from .adam import adam_step, init_adam
from .models import EpochRecord, TrainConfig

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]


def evaluate(model: ETCNModel, samples: Sequence[WindowedSample], batch_size: int = 256) -> Tuple[float, float]:
    """Eval-mode mean cross-entropy and top-1 accuracy."""
    if not samples:
        raise ValueError("Cannot evaluate on an empty sample list")
    logits = model.logits(samples, batch_size)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    accuracy = float(np.mean(np.argmax(logits, axis=1) == labels))
    return network_loss(logits, labels), accuracy


def batch_indices(n: int, batch_size: int, rng: Optional[np.random.Generator]) -> List[np.ndarray]:
    """Mini-batch index arrays for one epoch; a trailing batch of fewer than 2 samples is dropped."""
    order = rng.permutation(n) if rng is not None else np.arange(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if batches and len(batches[-1]) < 2:
        batches.pop()
    return batches


def fit(model: ETCNModel, split: DatasetSplit, config: TrainConfig,
        on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> Tuple[NetworkParams, List[EpochRecord]]:
    """
    Mini-batch Adam over the training split for a fixed number of epochs.

    Each epoch ends with a full eval-mode pass over train (and validation, when
    present). Parameters of the final epoch are returned; there is no early stopping.
    With learning_rate 0 the model is frozen, BN running statistics included.
    """
    train = split.train
    if len(train) < 2:
        raise ValueError(f"Training needs at least 2 samples, got {len(train)}")
    check_receptive_field(model.config)

    shuffle_rng = derive_rng(config.seed, "shuffle") if config.shuffle else None
    dropout_rng = derive_rng(config.seed, "dropout")
    state = init_adam(model.params)
    frozen_buffers = _snapshot(model.params.buffers) if config.learning_rate == 0 else None
    records: List[EpochRecord] = []

    for epoch in range(1, config.epochs + 1):
        for idx in batch_indices(len(train), config.batch_size, shuffle_rng):
            x, y = stack_windows([train[i] for i in idx])
            _, _, grads = model.loss_and_grads(x, y, dropout_rng)
            adam_step(model.params, grads, state, config.learning_rate)
            if frozen_buffers is not None:
                for name, value in frozen_buffers.items():
                    model.params.buffers[name][...] = value

        train_loss, train_acc = evaluate(model, train)
        val_loss, val_acc = evaluate(model, split.validation) if split.validation else (None, None)
        record = EpochRecord(epoch=epoch, train_loss=train_loss, train_accuracy=train_acc,
                             val_loss=val_loss, val_accuracy=val_acc)
        records.append(record)
        logger.info(
            f"[TRAIN] epoch={epoch} train_loss={train_loss:.6f} train_acc={train_acc:.4f} "
            f"val_loss={val_loss if val_loss is None else round(val_loss, 6)} "
            f"val_acc={val_acc if val_acc is None else round(val_acc, 4)}"
        )
        if on_epoch is not None:
            on_epoch(record)

    return model.params, records


def _snapshot(arrays: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return {name: value.copy() for name, value in arrays.items()}


def train_on_dataset(dataset: PreparedDataset, net_config: NetworkConfig,
                     train_config: TrainConfig) -> Tuple[ETCNModel, List[EpochRecord]]:
    """Fresh model, initialized from the training seed, fitted on the dataset's split."""
    if net_config.n_vars != dataset.n_vars:
        raise ValueError(f"Network expects {net_config.n_vars} variables, dataset has {dataset.n_vars}")
    model = ETCNModel(net_config, seed=derive_seed(train_config.seed, "init"))
    _, records = fit(model, dataset.split, train_config)
    return model, records


# ===============================================================================
# Curve artifacts
# ===============================================================================

def curves_frame(records: Sequence[EpochRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy) for r in records],
        columns=CURVE_COLUMNS,
    )


def write_curves_csv(path: Path, records: Sequence[EpochRecord]) -> Path:
    atomic_write_text(path, curves_frame(records).to_csv(index=False, lineterminator="\n"))
    return Path(path)


def plot_curves(out_dir: Path, records: Sequence[EpochRecord]) -> List[Path]:
    frame = curves_frame(records)
    epochs = frame["epoch"].tolist()
    loss = {"train": frame["train_loss"].tolist()}
    acc = {"train": frame["train_acc"].tolist()}
    if frame["val_loss"].notna().all():
        loss["validation"] = frame["val_loss"].tolist()
        acc["validation"] = frame["val_acc"].tolist()
    out_dir = Path(out_dir)
    return [
        plot_lines(out_dir / "loss_curve.svg", epochs, loss, "Loss", "epoch", "cross-entropy"),
        plot_lines(out_dir / "accuracy_curve.svg", epochs, acc, "Accuracy", "epoch", "accuracy"),
    ]
