import logging

import numpy as np
import pytest
from pydantic import ValidationError

from plant_data.constants import PLANT_VARIABLES, STEADY_BAND, FaultClass
from plant_data.generator import channel_layout, enumerate_scenarios, generate_dataset, generate_scenario
from plant_data.models import GeneratorConfig, ScenarioSpec, TimeSeries
from plant_data.services import (
    add_gaussian_noise,
    fit_normalizer,
    normalize,
    prepare_dataset,
    slide_windows,
    split_dataset,
    stack_windows,
    window_statistics,
)
from plant_data.storage import load_dataset, read_scenarios, save_dataset, write_scenarios


def _series(values, labels=None, class_id=FaultClass.NO):
    values = np.asarray(values, dtype=float)
    labels = np.zeros(values.shape[1], dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
    return TimeSeries(values=values, labels=labels, scenario=ScenarioSpec(class_id=class_id, severity=0.1))


# ===============================================================================
# Generator
# ===============================================================================

def test_default_config_enumerates_63_scenarios():
    specs = enumerate_scenarios(GeneratorConfig())
    assert len(specs) == 63
    assert [s.class_id for s in specs[:3]] == [FaultClass.NO] * 3
    assert {s.class_id for s in specs[3:]} == {FaultClass.LOCA, FaultClass.MSLB, FaultClass.SGTR}


def test_classes_no_gives_only_steady_runs():
    config = GeneratorConfig(classes="NO", n_steps=50, onset_step=10)
    series = generate_dataset(config)
    assert len(series) == config.steady_runs
    assert all(ts.scenario.class_id == FaultClass.NO for ts in series)
    assert all(not ts.labels.any() for ts in series)


def test_empty_generator_config_raises():
    with pytest.raises(ValueError):
        generate_dataset(GeneratorConfig(classes="NO", steady_runs=0, n_steps=50, onset_step=10))


def test_invalid_generator_config():
    with pytest.raises(ValidationError):
        GeneratorConfig(n_steps=10, onset_step=10)
    with pytest.raises(ValidationError):
        GeneratorConfig(classes="LOCA,MELTDOWN")


def test_accident_severity_is_validated():
    with pytest.raises(ValidationError):
        ScenarioSpec(class_id=FaultClass.LOCA, severity=0.9)
    assert ScenarioSpec(class_id="sgtr", severity=0.2).class_id == FaultClass.SGTR


def test_labels_switch_at_onset():
    ts = generate_scenario(ScenarioSpec(class_id=FaultClass.MSLB, severity=0.3, onset_step=40, seed=1), 26, 200)
    assert not ts.labels[:40].any()
    assert (ts.labels[40:] == int(FaultClass.MSLB)).all()


def test_steady_state_stays_within_band():
    ts = generate_scenario(ScenarioSpec(class_id=FaultClass.NO, seed=5), 26, 900)
    nominal = np.array([v.nominal for v in PLANT_VARIABLES])
    relative = np.abs(ts.values / nominal[:, None] - 1.0)
    assert relative.max() <= STEADY_BAND / 2 + 1e-12


def test_pre_onset_data_does_not_depend_on_class():
    base = dict(severity=0.25, onset_step=30, seed=11)
    loca = generate_scenario(ScenarioSpec(class_id=FaultClass.LOCA, **base), 26, 100)
    sgtr = generate_scenario(ScenarioSpec(class_id=FaultClass.SGTR, **base), 26, 100)
    np.testing.assert_array_equal(loca.values[:, :30], sgtr.values[:, :30])
    assert not np.allclose(loca.values[:, 60:], sgtr.values[:, 60:])


def test_larger_severity_gives_larger_excursion():
    def excursion(sev):
        ts = generate_scenario(ScenarioSpec(class_id=FaultClass.LOCA, severity=sev, onset_step=20, seed=2), 26, 400)
        return np.abs(ts.values[:, -1] / ts.values[:, 0] - 1.0).max()
    assert excursion(0.5) > excursion(0.1) > excursion(0.025)


def test_rupture_loop_responds_more_than_other_loops():
    ts = generate_scenario(ScenarioSpec(class_id=FaultClass.LOCA, severity=0.5, onset_step=20, seed=4), 26, 600)
    layout = channel_layout(26)
    flow = [i for i, v in enumerate(layout) if v.group == "coolant_flow"]
    change = np.abs(ts.values[flow, -1] / ts.values[flow, 0] - 1.0)
    loop1 = [j for j, i in enumerate(flow) if layout[i].loop == 1][0]
    assert change[loop1] == change.max()


def test_generation_is_deterministic(small_generator_config):
    a = generate_dataset(small_generator_config)
    b = generate_dataset(small_generator_config)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.values, y.values)
    c = generate_dataset(small_generator_config.model_copy(update={"seed": 8}))
    assert not np.array_equal(a[0].values, c[0].values)


# ===============================================================================
# Noise and normalization
# ===============================================================================

def test_zero_noise_is_identity_copy():
    ts = _series(np.arange(12.0).reshape(2, 6))
    out = add_gaussian_noise(ts, 0.0, seed=1)
    np.testing.assert_array_equal(out.values, ts.values)
    assert out.values is not ts.values


def test_noise_scales_with_channel_std():
    rng = np.random.default_rng(0)
    n = 100_000
    values = np.vstack([rng.normal(0, 1.0, n), rng.normal(0, 10.0, n), np.full(n, 3.0)])
    ts = _series(values)
    noisy = add_gaussian_noise(ts, 0.05, seed=2)
    added = noisy.values - values
    assert added[0].std() == pytest.approx(0.05 * values[0].std(), rel=0.02)
    assert added[1].std() == pytest.approx(0.05 * values[1].std(), rel=0.02)
    np.testing.assert_array_equal(noisy.values[2], values[2])


def test_negative_noise_fraction_raises():
    with pytest.raises(ValueError):
        add_gaussian_noise(_series(np.ones((1, 4))), -0.1, seed=0)


def test_normalize_maps_training_range_to_unit_interval():
    train = _series([[1.0, 3.0, 5.0], [2.0, 2.0, 2.0]])
    stats = fit_normalizer([train])
    out = normalize(train, stats)
    np.testing.assert_allclose(out.values[0], [0.0, 0.5, 1.0])
    # Zero span maps to 0.5
    np.testing.assert_array_equal(out.values[1], [0.5, 0.5, 0.5])
    # Values outside the training range are not clipped
    other = normalize(_series([[7.0, -1.0], [2.0, 9.0]]), stats)
    np.testing.assert_allclose(other.values[0], [1.5, -0.5])


def test_normalize_rejects_variable_mismatch():
    stats = fit_normalizer([_series(np.ones((2, 3)))])
    with pytest.raises(ValueError):
        normalize(_series(np.ones((3, 3))), stats)


# ===============================================================================
# Windows and splits
# ===============================================================================

def test_window_count_formula_sweep():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = int(rng.integers(1, 80))
        w = int(rng.integers(1, n + 1))
        s = int(rng.integers(1, 10))
        windows = slide_windows(_series(np.zeros((2, n))), w, s)
        assert len(windows) == (n - w) // s + 1
        assert all(win.window.shape == (2, w) for win in windows)


def test_window_label_is_label_at_endpoint():
    labels = np.array([0] * 10 + [2] * 10)
    windows = slide_windows(_series(np.zeros((1, 20)), labels, FaultClass.MSLB), width=5, step=1)
    # window ending at t=9 is still normal, the one ending at the onset step is not
    by_end = {w.source_time: w.label for w in windows}
    assert by_end[9] == 0
    assert by_end[10] == 2


def test_window_is_a_view():
    ts = _series(np.arange(20.0).reshape(2, 10))
    win = slide_windows(ts, 4, 3)[1]
    assert np.shares_memory(win.window, ts.values)
    np.testing.assert_array_equal(win.window, ts.values[:, 3:7])


def test_invalid_window_arguments():
    ts = _series(np.zeros((1, 10)))
    with pytest.raises(ValueError):
        slide_windows(ts, 11, 1)
    with pytest.raises(ValueError):
        slide_windows(ts, 5, 0)


def test_full_width_gives_one_window_per_series():
    windows = slide_windows(_series(np.zeros((1, 900))), 900, 1)
    assert len(windows) == 1


def _labelled_windows(counts):
    samples = []
    for label, n in counts.items():
        ts = _series(np.zeros((1, n)), np.full(n, label), FaultClass(label))
        samples += slide_windows(ts, 1, 1, series_index=label)
    return samples


def test_split_is_stratified_6_2_2():
    split = split_dataset(_labelled_windows({0: 100, 1: 50, 2: 30}), (6, 2, 2), seed=0)
    for name, expected in {"train": {0: 60, 1: 30, 2: 18}, "validation": {0: 20, 1: 10, 2: 6},
                           "test": {0: 20, 1: 10, 2: 6}}.items():
        got = {}
        for s in split.subset(name):
            got[s.label] = got.get(s.label, 0) + 1
        assert got == expected


def test_split_is_a_partition_and_deterministic():
    samples = _labelled_windows({0: 37, 3: 23})
    a = split_dataset(samples, (6, 2, 2), seed=5)
    b = split_dataset(samples, (6, 2, 2), seed=5)
    keys = lambda lst: [(s.series_index, s.start) for s in lst]
    for name in ("train", "validation", "test"):
        assert keys(a.subset(name)) == keys(b.subset(name))
    every = keys(a.train) + keys(a.validation) + keys(a.test)
    assert sorted(every) == sorted(keys(samples))


def test_split_warns_for_tiny_class(caplog):
    with caplog.at_level(logging.WARNING):
        split_dataset(_labelled_windows({0: 40, 1: 3}), (6, 2, 2), seed=0)
    assert "Class 1 has only 3 samples" in caplog.text


def test_split_rejects_bad_ratios():
    with pytest.raises(ValueError):
        split_dataset(_labelled_windows({0: 10}), (6, 2), seed=0)
    with pytest.raises(ValueError):
        split_dataset(_labelled_windows({0: 10}), (0, 0, 0), seed=0)


def test_stack_windows_shapes(small_dataset):
    x, y = stack_windows(small_dataset.split.train[:5])
    assert x.shape == (5, 6, 16)
    assert y.shape == (5,)
    with pytest.raises(ValueError):
        stack_windows([])


# ===============================================================================
# Window statistics
# ===============================================================================

def test_constant_channel_has_zero_variance():
    ts = _series(np.vstack([np.full(400, 4.2), np.linspace(0, 1, 400)]))
    table = window_statistics(ts, [60, 300])
    for width, stats in table.items():
        assert stats.mean.shape == (2, 400 - width + 1)
        np.testing.assert_allclose(stats.variance[0], 0.0, atol=1e-20)
        np.testing.assert_allclose(stats.mean[0], 4.2)


def test_window_statistics_match_brute_force_on_step_signal():
    signal = np.where(np.arange(600) < 300, 0.0, 1.0)
    ts = _series(signal[None, :])
    table = window_statistics(ts, [60, 300])
    for width, stats in table.items():
        brute = np.array([signal[e - width + 1:e + 1].std() for e in range(width - 1, 600)])
        np.testing.assert_allclose(stats.std[0], brute, atol=1e-12)
    # A step that fills half a window gives std 0.5 for every width
    assert table[60].std[0].max() == pytest.approx(0.5)
    assert table[300].std[0].max() == pytest.approx(0.5)
    # The wide window stays disturbed over more end points
    assert (table[300].std[0] > 0).sum() > (table[60].std[0] > 0).sum()


def test_window_statistics_rejects_bad_widths():
    ts = _series(np.zeros((1, 50)))
    with pytest.raises(ValueError):
        window_statistics(ts, [])
    with pytest.raises(ValueError):
        window_statistics(ts, [60])
    with pytest.raises(ValueError):
        window_statistics(ts, [10], variables=[3])


# ===============================================================================
# Full preprocessing chain and storage
# ===============================================================================

def test_prepare_dataset_counts(small_dataset):
    assert small_dataset.split.counts() == {"train": 58, "validation": 19, "test": 19}
    assert small_dataset.n_vars == 6


def test_normalizer_is_fitted_on_training_windows(small_dataset):
    x, _ = stack_windows(small_dataset.split.train)
    assert x.min() == pytest.approx(0.0)
    assert x.max() == pytest.approx(1.0)


def test_prepare_dataset_rejects_wide_window(small_series):
    with pytest.raises(ValueError):
        prepare_dataset(small_series, width=61)


def test_scenario_csvs_round_trip(tmp_path, small_series):
    paths = write_scenarios(tmp_path, small_series)
    assert len(paths) == len(small_series) + 1
    assert (tmp_path / "index.csv").exists()
    header = (tmp_path / "scenario_000.csv").read_text().splitlines()[0]
    assert header == "t,var01,var02,var03,var04,var05,var06,label"

    loaded = read_scenarios(tmp_path)
    assert [ts.scenario for ts in loaded] == [ts.scenario for ts in small_series]
    np.testing.assert_allclose(loaded[3].values, small_series[3].values, rtol=1e-12)
    np.testing.assert_array_equal(loaded[3].labels, small_series[3].labels)


def test_dataset_file_is_reproducible(tmp_path, small_dataset):
    first = save_dataset(tmp_path / "a.etcn", small_dataset)
    second = save_dataset(tmp_path / "b.etcn", small_dataset)
    assert first.read_bytes() == second.read_bytes()

    loaded = load_dataset(first)
    assert loaded.fingerprint() == small_dataset.fingerprint()
    assert loaded.normalizer == small_dataset.normalizer
    np.testing.assert_array_equal(loaded.split.test[0].window, small_dataset.split.test[0].window)


def test_load_dataset_rejects_other_containers(tmp_path):
    from utils.serialization import write_container
    write_container(tmp_path / "x.etcn", {"format": "something-else", "version": 1}, {})
    with pytest.raises(ValueError):
        load_dataset(tmp_path / "x.etcn")
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "missing.etcn")
