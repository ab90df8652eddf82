import logging
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from network.etcn import ETCNModel
from network.constants import ModelVariant
from network.models import NetworkConfig
from plant_data.constants import FaultClass
from plant_data.models import PreparedDataset, WindowedSample
from training.models import TrainConfig
from training.services import train_on_dataset
from utils.seeding import derive_seed
from .models import AblationRow, ClassMetrics, ConfusionMatrix, MetricsReport, VariantResult

logger = logging.getLogger(__name__)


def default_class_names(n_classes: int) -> List[str]:
    if n_classes == len(FaultClass):
        return [c.name for c in FaultClass]
    return [str(i) for i in range(n_classes)]


def confusion_matrix(true_labels: Sequence[int], predicted_labels: Sequence[int], n_classes: int,
                     class_names: Optional[List[str]] = None) -> ConfusionMatrix:
    true = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != pred.shape:
        raise ValueError(f"Label vectors differ in length: {true.shape[0]} vs {pred.shape[0]}")
    for labels in (true, pred):
        if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
            raise ValueError(f"Class ids must lie in [0, {n_classes - 1}]")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return ConfusionMatrix(counts=counts, class_names=class_names)


def _ratio(num: float, den: float) -> Tuple[float, bool]:
    return (num / den, False) if den > 0 else (0.0, True)


def _f1(precision: float, recall: float) -> float:
    total = precision + recall
    return 2.0 * precision * recall / total if total > 0 else 0.0


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """
    Accuracy = trace / total. Per class, one-vs-rest TP/FP/FN give precision,
    recall and F1; macro scores are unweighted class means. A zero denominator
    scores 0 and flags the class as degenerate.
    """
    total = cm.total
    if total == 0:
        raise ValueError("Cannot compute metrics on an empty confusion matrix")
    counts = cm.counts.astype(float)
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp

    per_class = []
    for i, name in enumerate(cm.names()):
        precision, bad_p = _ratio(tp[i], tp[i] + fp[i])
        recall, bad_r = _ratio(tp[i], tp[i] + fn[i])
        per_class.append(ClassMetrics(
            name=name,
            accuracy=(total - fp[i] - fn[i]) / total,
            precision=precision,
            recall=recall,
            f1=_f1(precision, recall),
            support=int(tp[i] + fn[i]),
            degenerate=bad_p or bad_r,
        ))
        if bad_p or bad_r:
            logger.warning(f"[EVAL] Degenerate class {name}: tp={int(tp[i])} fp={int(fp[i])} fn={int(fn[i])}")

    accuracy = float(np.trace(counts) / total)
    micro_p, _ = _ratio(tp.sum(), tp.sum() + fp.sum())
    micro_r, _ = _ratio(tp.sum(), tp.sum() + fn.sum())
    healthy = [c for c in per_class if not c.degenerate]
    return MetricsReport(
        accuracy=accuracy,
        macro_precision=float(np.mean([c.precision for c in per_class])),
        macro_recall=float(np.mean([c.recall for c in per_class])),
        macro_f1=float(np.mean([c.f1 for c in per_class])),
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=_f1(micro_p, micro_r),
        per_class=per_class,
        macro_excluding_degenerate={
            metric: float(np.mean([getattr(c, metric) for c in healthy])) if healthy else 0.0
            for metric in ("precision", "recall", "f1")
        },
    )


def evaluate_model(model: ETCNModel, samples: Sequence[WindowedSample],
                   class_names: Optional[List[str]] = None) -> Tuple[ConfusionMatrix, MetricsReport]:
    if not samples:
        raise ValueError("Cannot evaluate on an empty sample list")
    n_classes = model.config.n_classes
    predicted = model.predict(samples)
    cm = confusion_matrix([s.label for s in samples], predicted, n_classes,
                          class_names or default_class_names(n_classes))
    return cm, compute_metrics(cm)


# ===============================================================================
# Ablation
# ===============================================================================

def _mean_std(values: List[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), (float(arr.std(ddof=1)) if arr.size >= 2 else 0.0)


def ablation_table(results: Sequence[VariantResult]) -> List[AblationRow]:
    """Mean and sample std per variant, in order of first appearance."""
    if not results:
        raise ValueError("No variant results to tabulate")
    fingerprints = {r.split_fingerprint for r in results}
    if len(fingerprints) != 1:
        raise ValueError(f"Variants were evaluated on different splits: {sorted(fingerprints)}")

    grouped: "OrderedDict[str, List[MetricsReport]]" = OrderedDict()
    for r in results:
        grouped.setdefault(r.variant, []).append(r.report)

    rows = []
    for variant, reports in grouped.items():
        acc = _mean_std([m.accuracy for m in reports])
        prec = _mean_std([m.macro_precision for m in reports])
        rec = _mean_std([m.macro_recall for m in reports])
        f1 = _mean_std([m.macro_f1 for m in reports])
        rows.append(AblationRow(
            variant=variant, runs=len(reports),
            accuracy_mean=acc[0], accuracy_std=acc[1],
            precision_mean=prec[0], precision_std=prec[1],
            recall_mean=rec[0], recall_std=rec[1],
            f1_mean=f1[0], f1_std=f1[1],
        ))
    return rows


_worker_dataset: Optional[PreparedDataset] = None


def _install_dataset(dataset: PreparedDataset) -> None:
    global _worker_dataset
    _worker_dataset = dataset


def _run_variant(task: Tuple[str, int, Dict[str, Any], Dict[str, Any]]) -> VariantResult:
    variant, run, net_overrides, train_fields = task
    dataset = _worker_dataset
    net = NetworkConfig.variant(variant, n_vars=dataset.n_vars, window_width=dataset.width, **net_overrides)
    train = TrainConfig(**train_fields)
    model, _ = train_on_dataset(dataset, net, train)
    _, report = evaluate_model(model, dataset.split.test)
    logger.info(f"[EVAL] variant={variant} run={run} accuracy={report.accuracy:.4f} macro_f1={report.macro_f1:.4f}")
    return VariantResult(variant=variant, run=run, split_fingerprint=dataset.fingerprint(), report=report)


def run_ablation(dataset: PreparedDataset, variants: Sequence[str], runs: int, train_config: TrainConfig,
                 net_overrides: Optional[Dict[str, Any]] = None, jobs: int = 1) -> List[VariantResult]:
    """
    Trains and tests every variant `runs` times on the same split. Run r uses
    the same seed for every variant.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    unknown = [v for v in variants if v not in {m.value for m in ModelVariant}]
    if unknown:
        raise ValueError(f"Unknown model variant(s) {unknown}")
    if not dataset.split.test:
        raise ValueError("Ablation needs a non-empty test split")

    tasks = []
    for variant in variants:
        for run in range(runs):
            fields = train_config.model_dump()
            fields["seed"] = derive_seed(train_config.seed, "run", run)
            tasks.append((variant, run, dict(net_overrides or {}), fields))

    if jobs <= 1:
        _install_dataset(dataset)
        return [_run_variant(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_install_dataset, initargs=(dataset,)) as pool:
        return list(pool.map(_run_variant, tasks))
