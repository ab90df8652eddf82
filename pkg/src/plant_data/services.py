import logging
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from utils.seeding import derive_rng, derive_seed
from .constants import (
    DEFAULT_ANALYSIS_WIDTHS,
    DEFAULT_NOISE_FRACTION,
    DEFAULT_SPLIT_RATIOS,
    DEFAULT_WINDOW_STEP,
    DEFAULT_WINDOW_WIDTH,
    MIN_SAMPLES_PER_CLASS,
)
from .models import (
    DatasetSplit,
    NormalizerStats,
    PreparedDataset,
    TimeSeries,
    WindowedSample,
    WindowStats,
)

logger = logging.getLogger(__name__)


# ===============================================================================
# Noise and normalization
# ===============================================================================

def add_gaussian_noise(ts: TimeSeries, fraction: float, seed: int) -> TimeSeries:
    """
    Adds zero-mean Gaussian noise with std = fraction * (the channel's own std).

    Constant channels have zero std and come back unchanged.
    """
    if fraction < 0:
        raise ValueError(f"Noise fraction must be non-negative, got {fraction}")
    if fraction == 0:
        return ts.model_copy(update={"values": ts.values.copy(), "labels": ts.labels.copy()})

    sigma = ts.values.std(axis=1)
    rng = derive_rng(seed, "noise")
    noise = rng.standard_normal(ts.values.shape) * (fraction * sigma)[:, None]
    return ts.model_copy(update={"values": ts.values + noise, "labels": ts.labels.copy()})


def _stats_from_blocks(blocks: Sequence[np.ndarray]) -> NormalizerStats:
    if not blocks:
        raise ValueError("Cannot fit a normalizer on empty input")
    n_vars = {b.shape[0] for b in blocks}
    if len(n_vars) != 1:
        raise ValueError(f"Inconsistent variable counts in normalizer input: {sorted(n_vars)}")
    blocks = [b for b in blocks if b.shape[1] > 0]
    if not blocks:
        raise ValueError("Cannot fit a normalizer on empty input")
    x_min = np.min([b.min(axis=1) for b in blocks], axis=0)
    x_max = np.max([b.max(axis=1) for b in blocks], axis=0)
    return NormalizerStats(x_min=x_min.tolist(), x_max=x_max.tolist())


def fit_normalizer(train_series: List[TimeSeries]) -> NormalizerStats:
    return _stats_from_blocks([ts.values for ts in train_series])


def normalize(ts: TimeSeries, stats: NormalizerStats) -> TimeSeries:
    """Min-max scaling per variable. Zero-range variables map to 0.5; nothing is clipped."""
    if ts.n_vars != stats.n_vars:
        raise ValueError(f"Series has {ts.n_vars} variables but normalizer has {stats.n_vars}")
    x_min, x_max = stats.arrays()
    span = x_max - x_min
    safe = np.where(span > 0, span, 1.0)
    scaled = (ts.values - x_min[:, None]) / safe[:, None]
    scaled[span <= 0, :] = 0.5
    return ts.model_copy(update={"values": scaled})


# ===============================================================================
# Windows, splitting and window statistics
# ===============================================================================

def slide_windows(ts: TimeSeries, width: int = DEFAULT_WINDOW_WIDTH, step: int = DEFAULT_WINDOW_STEP,
                  series_index: int = 0) -> List[WindowedSample]:
    """
    Cuts the series into windows of `width` columns every `step` columns.

    Each window is a view into ts.values and carries the label of its last column.
    """
    if width < 1 or width > ts.n_steps:
        raise ValueError(f"Window width {width} must lie in [1, {ts.n_steps}]")
    if step < 1:
        raise ValueError(f"Window step must be >= 1, got {step}")

    count = (ts.n_steps - width) // step + 1
    samples = []
    for j in range(count):
        start = j * step
        end = start + width - 1
        samples.append(WindowedSample(
            window=ts.values[:, start:start + width],
            label=int(ts.labels[end]),
            source_time=end,
            series_index=series_index,
            start=start,
        ))
    return samples


def _split_counts(n: int, ratios: Sequence[float]) -> tuple:
    total = float(sum(ratios))
    n_train = min(n, int(np.floor(n * ratios[0] / total + 0.5)))
    n_val = min(n - n_train, int(np.floor(n * ratios[1] / total + 0.5)))
    return n_train, n_val, n - n_train - n_val


def split_dataset(samples: List[WindowedSample], ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS,
                  seed: int = 0) -> DatasetSplit:
    """Stratified shuffle split: each class is shuffled and partitioned on its own."""
    if not samples:
        raise ValueError("Cannot split an empty sample list")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ValueError(f"Split ratios must be three non-negative numbers with a positive sum, got {ratios}")

    by_class: Dict[int, List[WindowedSample]] = defaultdict(list)
    for sample in samples:
        by_class[sample.label].append(sample)

    rng = derive_rng(seed, "split")
    split = DatasetSplit()
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < MIN_SAMPLES_PER_CLASS:
            logger.warning(f"[DATA] Class {label} has only {len(members)} samples; split is best effort")
        order = rng.permutation(len(members))
        n_train, n_val, _ = _split_counts(len(members), ratios)
        split.train.extend(members[i] for i in order[:n_train])
        split.validation.extend(members[i] for i in order[n_train:n_train + n_val])
        split.test.extend(members[i] for i in order[n_train + n_val:])

    logger.info(f"[DATA] Split samples {split.counts()}")
    return split


def window_statistics(ts: TimeSeries, widths: Sequence[int] = DEFAULT_ANALYSIS_WIDTHS,
                      variables: Optional[Sequence[int]] = None) -> Dict[int, WindowStats]:
    """Per-window mean, variance and std for each requested width."""
    if not widths:
        raise ValueError("At least one window width is required")
    variables = list(range(ts.n_vars)) if variables is None else list(variables)
    if any(v < 0 or v >= ts.n_vars for v in variables):
        raise ValueError(f"Variable indices must lie in [0, {ts.n_vars - 1}], got {variables}")

    selected = ts.values[variables, :]
    table: Dict[int, WindowStats] = {}
    for width in widths:
        if width < 1 or width > ts.n_steps:
            raise ValueError(f"Window width {width} must lie in [1, {ts.n_steps}]")
        view = np.lib.stride_tricks.sliding_window_view(selected, width, axis=1)
        mean = view.mean(axis=2)
        variance = view.var(axis=2)
        table[int(width)] = WindowStats(
            width=int(width), variables=variables, mean=mean, variance=variance, std=np.sqrt(variance),
        )
    return table


# ===============================================================================
# Full preprocessing chain
# ===============================================================================

def prepare_dataset(series: List[TimeSeries], width: int = DEFAULT_WINDOW_WIDTH, step: int = DEFAULT_WINDOW_STEP,
                    noise_fraction: float = DEFAULT_NOISE_FRACTION,
                    ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS, seed: int = 0) -> PreparedDataset:
    """
    noise -> window positions -> stratified split -> normalizer fit on the
    training windows' columns -> normalize every series -> windows.
    """
    if not series:
        raise ValueError("No scenarios to preprocess")
    for i, ts in enumerate(series):
        if width > ts.n_steps:
            raise ValueError(f"Window width {width} exceeds length {ts.n_steps} of scenario {i}")

    noisy = [add_gaussian_noise(ts, noise_fraction, derive_seed(seed, "noise", i)) for i, ts in enumerate(series)]
    raw_windows = [w for i, ts in enumerate(noisy) for w in slide_windows(ts, width, step, series_index=i)]
    raw_split = split_dataset(raw_windows, ratios, seed)

    covered = [np.zeros(ts.n_steps, dtype=bool) for ts in noisy]
    for sample in raw_split.train:
        covered[sample.series_index][sample.start:sample.start + width] = True
    stats = _stats_from_blocks([ts.values[:, mask] for ts, mask in zip(noisy, covered)])

    normalized = [normalize(ts, stats) for ts in noisy]
    split = rebuild_split(normalized, raw_split, width)
    logger.info(
        f"[DATA] Prepared dataset scenarios={len(series)} width={width} step={step} "
        f"noise={noise_fraction} counts={split.counts()}"
    )
    return PreparedDataset(
        series=normalized, normalizer=stats, split=split, width=width, step=step,
        noise_fraction=noise_fraction, split_ratios=[float(r) for r in ratios], seed=seed,
    )


def _window_at(series: List[TimeSeries], series_index: int, start: int, width: int) -> WindowedSample:
    ts = series[series_index]
    if start < 0 or start + width > ts.n_steps:
        raise ValueError(f"Window start {start} out of range for scenario {series_index}")
    end = start + width - 1
    return WindowedSample(
        window=ts.values[:, start:start + width], label=int(ts.labels[end]),
        source_time=end, series_index=series_index, start=start,
    )


def rebuild_split(series: List[TimeSeries], template: DatasetSplit, width: int) -> DatasetSplit:
    """Same membership as `template`, with windows cut from `series`."""
    return DatasetSplit(**{
        name: [_window_at(series, s.series_index, s.start, width) for s in template.subset(name)]
        for name in ("train", "validation", "test")
    })


def split_from_membership(series: List[TimeSeries], membership: Dict[str, np.ndarray], width: int) -> DatasetSplit:
    return DatasetSplit(**{
        name: [_window_at(series, int(i), int(s), width) for i, s in membership[name]]
        for name in ("train", "validation", "test")
    })


def stack_windows(samples: Sequence[WindowedSample]):
    """Batch arrays (x [N x V x W], y [N]) for the network."""
    if not samples:
        raise ValueError("Cannot stack an empty sample list")
    x = np.stack([s.window for s in samples]).astype(np.float64, copy=False)
    y = np.array([s.label for s in samples], dtype=np.int64)
    return x, y
