"""
Data Commands

- generate: simulate the scenario grid and write one CSV per scenario plus index.csv
- preprocess: noise, normalize, window and split scenario CSVs into a dataset file
- window-analysis: per-window mean/variance/std of one scenario at several widths
"""

import logging
from pathlib import Path

import numpy as np

from plant_data.constants import DEFAULT_NOISE_FRACTION, DEFAULT_WINDOW_STEP, DEFAULT_WINDOW_WIDTH
from plant_data.generator import generate_dataset
from plant_data.models import GeneratorConfig
from plant_data.services import prepare_dataset, window_statistics
from plant_data.storage import (
    read_index,
    read_scenario_csv,
    read_scenarios,
    save_dataset,
    spec_from_row,
    variable_columns,
    write_scenarios,
    write_window_stats,
)
from utils.config import parse_int_list
from utils.plotting import plot_lines
from .dependencies import PLOT_ARG, SEED_ARG, as_strings, merged_config, out_arg, overrides, parse_ratios, resolve_out_dir
from .manifest import CommandResult
from .registry import CommandRouter, arg

router = CommandRouter(tags=["data"])
logger = logging.getLogger(__name__)

DATASET_FILE = "dataset.etcn"
GENERATOR_FIELDS = ["classes", "n_severities", "repetitions", "steady_runs", "n_vars", "n_steps", "onset_step", "seed"]


@router.command("generate", help="Simulate normal and accident scenarios as CSV files", arguments=[
    arg("--config", type=Path, help="key=value generator config file"),
    arg("--classes", type=str, help="Comma-separated classes, e.g. LOCA,MSLB,SGTR (NO alone gives steady runs only)"),
    arg("--n-severities", dest="n_severities", type=int),
    arg("--repetitions", type=int),
    arg("--steady-runs", dest="steady_runs", type=int),
    arg("--n-vars", dest="n_vars", type=int),
    arg("--n-steps", dest="n_steps", type=int),
    arg("--onset-step", dest="onset_step", type=int),
    arg("--seed", type=int, help="Root seed (default 0, or the config file's seed)"),
    out_arg("generate"),
])
def generate(args, app) -> CommandResult:
    config = GeneratorConfig(**merged_config(args.config, overrides(args, GENERATOR_FIELDS)))
    out_dir = resolve_out_dir(args, "generate")
    series = generate_dataset(config)
    paths = write_scenarios(out_dir, series)
    return CommandResult(
        out_dir=out_dir,
        config=config.model_dump(mode="json"),
        seed=config.seed,
        inputs=as_strings([args.config]) if args.config else [],
        outputs=as_strings(paths),
        summary={"scenarios": len(series)},
    )


@router.command("preprocess", help="Turn scenario CSVs into a windowed, normalized, split dataset", arguments=[
    arg("in_dir", type=Path, help="Directory written by `generate`"),
    arg("--width", type=int, default=DEFAULT_WINDOW_WIDTH, help="Window width in samples"),
    arg("--step", type=int, default=DEFAULT_WINDOW_STEP, help="Window stride in samples"),
    arg("--noise", type=float, default=DEFAULT_NOISE_FRACTION, help="Noise std as a fraction of each variable's std"),
    arg("--split", type=str, default="6:2:2", help="train:validation:test ratios"),
    SEED_ARG,
    out_arg("preprocess"),
])
def preprocess(args, app) -> CommandResult:
    ratios = parse_ratios(args.split)
    series = read_scenarios(args.in_dir)
    dataset = prepare_dataset(series, args.width, args.step, args.noise, ratios, args.seed)
    out_dir = resolve_out_dir(args, "preprocess")
    path = save_dataset(out_dir / DATASET_FILE, dataset)
    return CommandResult(
        out_dir=out_dir,
        config={"width": args.width, "step": args.step, "noise_fraction": args.noise, "split_ratios": ratios},
        seed=args.seed,
        inputs=[str(args.in_dir)],
        outputs=[str(path)],
        summary={
            "counts": dataset.split.counts(),
            "fingerprint": dataset.fingerprint(),
            "normalizer": dataset.normalizer.model_dump(),
        },
    )


def _selected_variables(text: str, n_vars: int):
    if not text:
        return list(range(n_vars))
    names = variable_columns(n_vars)
    chosen = []
    for item in (v.strip() for v in text.split(",") if v.strip()):
        if item not in names:
            raise ValueError(f"Unknown variable {item!r}; expected names like var01..var{n_vars:02d}")
        chosen.append(names.index(item))
    return chosen


def _read_scenario(path: Path):
    """Loads a scenario CSV, taking its metadata from the index.csv beside it."""
    index = read_index(path.parent)
    rows = index[index["file"] == path.name].to_dict("records")
    if not rows:
        raise ValueError(f"{path.name} is not listed in {path.parent / 'index.csv'}")
    return read_scenario_csv(path, spec_from_row(rows[0]))


@router.command("window-analysis", help="Window statistics of one scenario at several widths", arguments=[
    arg("scenario", type=Path, help="Scenario CSV written by `generate`"),
    arg("--widths", type=str, default="60,120,180,240,300", help="Comma-separated window widths"),
    arg("--variables", type=str, default="", help="Comma-separated columns, e.g. var01,var05 (default: all)"),
    PLOT_ARG,
    out_arg("window-analysis"),
])
def window_analysis(args, app) -> CommandResult:
    try:
        widths = parse_int_list(args.widths)
    except ValueError:
        raise ValueError(f"Invalid width list {args.widths!r}") from None
    if not widths or len(set(widths)) != len(widths):
        raise ValueError(f"Width list must be non-empty without repeats, got {args.widths!r}")

    ts = _read_scenario(args.scenario)
    variables = _selected_variables(args.variables, ts.n_vars)
    table = window_statistics(ts, widths, variables)
    out_dir = resolve_out_dir(args, "window-analysis")
    paths = write_window_stats(out_dir, table)

    if args.plot:
        names = variable_columns(ts.n_vars)
        ordered = sorted(table)
        paths.append(plot_lines(
            out_dir / "window_std.svg", ordered,
            {names[v]: [float(np.max(table[w].std[row])) for w in ordered] for row, v in enumerate(variables)},
            "Largest per-window std", "window width", "std",
        ))

    return CommandResult(
        out_dir=out_dir,
        config={"widths": widths, "variables": [variable_columns(ts.n_vars)[v] for v in variables]},
        inputs=[str(args.scenario)],
        outputs=as_strings(paths),
        summary={"class": ts.scenario.class_id.name, "severity": ts.scenario.severity},
    )
