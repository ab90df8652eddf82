import io
import logging
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd

from utils.serialization import atomic_write_text, read_container, write_container
from .constants import FaultClass
from .models import NormalizerStats, PreparedDataset, ScenarioSpec, TimeSeries, WindowStats
from .services import split_from_membership

logger = logging.getLogger(__name__)

INDEX_FILE = "index.csv"
INDEX_COLUMNS = ["file", "class_id", "class_name", "severity", "severity_index", "repetition", "onset_step", "seed"]
DATASET_FORMAT = "etcn-dataset"
DATASET_VERSION = 1


def variable_columns(n_vars: int) -> List[str]:
    return [f"var{i + 1:02d}" for i in range(n_vars)]


def _frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


# ===============================================================================
# Scenario CSVs
# ===============================================================================

def write_scenario_csv(path: Path, ts: TimeSeries) -> Path:
    frame = pd.DataFrame(ts.values.T, columns=variable_columns(ts.n_vars))
    frame.insert(0, "t", np.arange(ts.n_steps))
    frame["label"] = ts.labels
    atomic_write_text(path, _frame_to_csv(frame))
    return Path(path)


def read_scenario_csv(path: Path, scenario: ScenarioSpec) -> TimeSeries:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Missing scenario file: {path}")
    frame = pd.read_csv(path)
    var_cols = [c for c in frame.columns if c.startswith("var")]
    if list(frame.columns) != ["t"] + var_cols + ["label"] or not var_cols:
        raise ValueError(f"{path} does not have the header t,var01..varNN,label")
    return TimeSeries(
        values=frame[var_cols].to_numpy(dtype=np.float64).T.copy(),
        labels=frame["label"].to_numpy(dtype=np.int64),
        scenario=scenario,
    )


def write_scenarios(out_dir: Path, series: List[TimeSeries]) -> List[Path]:
    """One CSV per scenario plus index.csv listing class, severity and seed."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, paths = [], []
    for i, ts in enumerate(series):
        name = f"scenario_{i:03d}.csv"
        paths.append(write_scenario_csv(out_dir / name, ts))
        spec = ts.scenario
        rows.append({
            "file": name,
            "class_id": int(spec.class_id),
            "class_name": spec.class_id.name,
            "severity": spec.severity,
            "severity_index": -1 if spec.severity_index is None else spec.severity_index,
            "repetition": spec.repetition,
            "onset_step": spec.onset_step,
            "seed": spec.seed,
        })
    index_path = out_dir / INDEX_FILE
    atomic_write_text(index_path, _frame_to_csv(pd.DataFrame(rows, columns=INDEX_COLUMNS)))
    logger.info(f"[DATA] Wrote scenarios count={len(series)} dir={out_dir}")
    return paths + [index_path]


def read_index(in_dir: Path) -> pd.DataFrame:
    index_path = Path(in_dir) / INDEX_FILE
    if not index_path.exists():
        raise FileNotFoundError(f"Missing scenario index: {index_path}")
    frame = pd.read_csv(index_path)
    missing = set(INDEX_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{index_path} is missing columns {sorted(missing)}")
    return frame


def spec_from_row(row: Dict) -> ScenarioSpec:
    sev_idx = int(row["severity_index"])
    return ScenarioSpec(
        class_id=FaultClass(int(row["class_id"])),
        severity=float(row["severity"]),
        onset_step=int(row["onset_step"]),
        seed=int(row["seed"]),
        severity_index=None if sev_idx < 0 else sev_idx,
        repetition=int(row["repetition"]),
    )


def read_scenarios(in_dir: Path) -> List[TimeSeries]:
    in_dir = Path(in_dir)
    frame = read_index(in_dir)
    return [read_scenario_csv(in_dir / row["file"], spec_from_row(row)) for row in frame.to_dict("records")]


# ===============================================================================
# Windowed dataset container
# ===============================================================================

def save_dataset(path: Path, dataset: PreparedDataset) -> Path:
    lengths = {ts.n_steps for ts in dataset.series}
    if len(lengths) != 1:
        raise ValueError(f"All scenarios must have the same length to be stored, got {sorted(lengths)}")

    header = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "width": dataset.width,
        "step": dataset.step,
        "noise_fraction": dataset.noise_fraction,
        "split_ratios": dataset.split_ratios,
        "seed": dataset.seed,
        "normalizer": dataset.normalizer.model_dump(),
        "counts": dataset.split.counts(),
        "fingerprint": dataset.fingerprint(),
        "sample_period": dataset.series[0].sample_period,
        "scenarios": [ts.scenario.model_dump(mode="json") for ts in dataset.series],
    }
    arrays = {
        "series_values": np.stack([ts.values for ts in dataset.series]),
        "series_labels": np.stack([ts.labels for ts in dataset.series]).astype(np.int64),
    }
    arrays.update(dataset.membership())
    write_container(path, header, arrays)
    logger.info(f"[DATA] Saved dataset path={path} counts={dataset.split.counts()}")
    return Path(path)


def load_dataset(path: Path) -> PreparedDataset:
    header, arrays = read_container(path)
    if header.get("format") != DATASET_FORMAT:
        raise ValueError(f"{path} is not a windowed dataset (format={header.get('format')!r})")
    if header.get("version") != DATASET_VERSION:
        raise ValueError(f"Unsupported dataset version {header.get('version')} in {path}")

    values, labels = arrays["series_values"], arrays["series_labels"]
    series = [
        TimeSeries(values=values[i], labels=labels[i], sample_period=header["sample_period"],
                   scenario=ScenarioSpec(**spec))
        for i, spec in enumerate(header["scenarios"])
    ]
    width = int(header["width"])
    split = split_from_membership(series, {k: arrays[k] for k in ("train", "validation", "test")}, width)
    dataset = PreparedDataset(
        series=series,
        normalizer=NormalizerStats(**header["normalizer"]),
        split=split,
        width=width,
        step=int(header["step"]),
        noise_fraction=float(header["noise_fraction"]),
        split_ratios=header["split_ratios"],
        seed=int(header["seed"]),
    )
    if dataset.fingerprint() != header["fingerprint"]:
        raise ValueError(f"Dataset {path} is corrupt: fingerprint mismatch")
    return dataset


# ===============================================================================
# Window statistics CSVs
# ===============================================================================

def write_window_stats(out_dir: Path, table: Dict[int, WindowStats]) -> List[Path]:
    """One CSV per width: window_end then <var>_mean, <var>_variance, <var>_std per variable."""
    out_dir = Path(out_dir)
    paths = []
    for width in sorted(table):
        stats = table[width]
        n_windows = stats.mean.shape[1]
        columns = {"window_end": np.arange(n_windows) + width - 1}
        names = variable_columns(max(stats.variables) + 1)
        for row, var in enumerate(stats.variables):
            columns[f"{names[var]}_mean"] = stats.mean[row]
            columns[f"{names[var]}_variance"] = stats.variance[row]
            columns[f"{names[var]}_std"] = stats.std[row]
        path = out_dir / f"window_stats_w{width:03d}.csv"
        atomic_write_text(path, _frame_to_csv(pd.DataFrame(columns)))
        paths.append(path)
    return paths
