from pathlib import Path
from typing import List, Sequence

import pandas as pd

from utils.serialization import atomic_write_text
from .models import AblationRow, ConfusionMatrix, MetricsReport

METRIC_COLUMNS = ["scope", "accuracy", "precision", "recall", "f1", "support", "degenerate"]


def _write(path: Path, frame: pd.DataFrame, index: bool = False) -> Path:
    atomic_write_text(path, frame.to_csv(index=index, lineterminator="\n"))
    return Path(path)


def metrics_frame(report: MetricsReport, total: int) -> pd.DataFrame:
    rows = [
        ("macro", report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1, total, False),
        ("micro", report.accuracy, report.micro_precision, report.micro_recall, report.micro_f1, total, False),
        ("macro_excluding_degenerate", report.accuracy,
         report.macro_excluding_degenerate.get("precision", 0.0),
         report.macro_excluding_degenerate.get("recall", 0.0),
         report.macro_excluding_degenerate.get("f1", 0.0), total, False),
    ]
    rows += [
        (f"class:{c.name}", c.accuracy, c.precision, c.recall, c.f1, c.support, c.degenerate)
        for c in report.per_class
    ]
    return pd.DataFrame(rows, columns=METRIC_COLUMNS)


def write_metrics_csv(path: Path, report: MetricsReport, cm: ConfusionMatrix) -> Path:
    return _write(path, metrics_frame(report, cm.total))


def write_confusion_csv(path: Path, cm: ConfusionMatrix, normalized: bool = False) -> Path:
    """Rows are true classes, columns predicted classes."""
    names = cm.names()
    data = cm.normalized() if normalized else cm.counts
    frame = pd.DataFrame(data, index=pd.Index(names, name="true"), columns=names)
    return _write(path, frame, index=True)


def ablation_frame(rows: Sequence[AblationRow]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in rows], columns=list(AblationRow.model_fields))


def write_ablation_csv(path: Path, rows: Sequence[AblationRow]) -> Path:
    return _write(path, ablation_frame(rows))


def write_evaluation(out_dir: Path, cm: ConfusionMatrix, report: MetricsReport, prefix: str) -> List[Path]:
    out_dir = Path(out_dir)
    return [
        write_metrics_csv(out_dir / f"{prefix}_metrics.csv", report, cm),
        write_confusion_csv(out_dir / f"{prefix}_confusion.csv", cm),
        write_confusion_csv(out_dir / f"{prefix}_confusion_normalized.csv", cm, normalized=True),
    ]
