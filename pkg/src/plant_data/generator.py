"""
Synthetic stand-in for the plant simulator.

Each channel starts from its nominal value with a small AR(1) wander. After
fault onset it follows a first-order exponential ramp toward a class-specific
offset pattern whose amplitude grows linearly with severity.
"""

import logging
from typing import List

import numpy as np

from utils.seeding import derive_rng, derive_seed
from .constants import (
    BASE_TIME_CONSTANTS,
    PLANT_VARIABLES,
    RESPONSE_PATTERNS,
    SEVERITY_MAX,
    SEVERITY_MIN,
    STEADY_BAND,
    WANDER_PHI,
    WANDER_SIGMA,
    FaultClass,
    PlantVariable,
)
from .models import GeneratorConfig, ScenarioSpec, TimeSeries

logger = logging.getLogger(__name__)


def channel_layout(n_vars: int) -> List[PlantVariable]:
    """Channel descriptors for n_vars channels; the plant table repeats past 26."""
    return [PLANT_VARIABLES[i % len(PLANT_VARIABLES)] for i in range(n_vars)]


def _offsets(fault: FaultClass, layout: List[PlantVariable]) -> np.ndarray:
    pattern = RESPONSE_PATTERNS[fault]
    out = np.zeros(len(layout))
    for i, var in enumerate(layout):
        entry = pattern[var.group]
        if isinstance(entry, tuple):
            out[i] = entry[0] if var.loop == 1 else entry[1]
        else:
            out[i] = entry
    return out


def _time_constant(fault: FaultClass, severity: float) -> float:
    # Larger breaks evolve faster: tau shrinks to half its base value at top severity
    rel = (severity - SEVERITY_MIN) / (SEVERITY_MAX - SEVERITY_MIN)
    return BASE_TIME_CONSTANTS[fault] * (1.0 - 0.5 * float(np.clip(rel, 0.0, 1.0)))


def _steady_wander(rng: np.random.Generator, n_vars: int, n_steps: int) -> np.ndarray:
    limit = STEADY_BAND / 2.0
    innovations = rng.standard_normal((n_vars, n_steps)) * WANDER_SIGMA
    wander = np.empty((n_vars, n_steps))
    state = np.zeros(n_vars)
    for t in range(n_steps):
        state = np.clip(WANDER_PHI * state + innovations[:, t], -limit, limit)
        wander[:, t] = state
    return wander


def generate_scenario(spec: ScenarioSpec, n_vars: int, n_steps: int) -> TimeSeries:
    if n_vars <= 0 or n_steps <= 0:
        raise ValueError(f"Dimensions must be positive, got n_vars={n_vars} n_steps={n_steps}")
    if spec.onset_step >= n_steps:
        raise ValueError(f"onset_step {spec.onset_step} must be < n_steps {n_steps}")

    layout = channel_layout(n_vars)
    nominal = np.array([v.nominal for v in layout])

    # The wander stream depends on the seed only, so pre-onset data is class independent
    rng = derive_rng(spec.seed, "wander")
    values = nominal[:, None] * (1.0 + _steady_wander(rng, n_vars, n_steps))

    labels = np.zeros(n_steps, dtype=np.int64)
    if spec.class_id != FaultClass.NO:
        labels[spec.onset_step:] = int(spec.class_id)
        amplitude = _offsets(spec.class_id, layout) * (spec.severity / SEVERITY_MAX)
        tau = _time_constant(spec.class_id, spec.severity)
        elapsed = np.arange(n_steps - spec.onset_step, dtype=float)
        ramp = 1.0 - np.exp(-elapsed / tau)
        values[:, spec.onset_step:] += (nominal * amplitude)[:, None] * ramp[None, :]

    return TimeSeries(values=values, labels=labels, scenario=spec)


def enumerate_scenarios(config: GeneratorConfig) -> List[ScenarioSpec]:
    """Steady runs first, then every accident class x severity x repetition."""
    specs: List[ScenarioSpec] = []
    for run in range(config.steady_runs):
        specs.append(ScenarioSpec(
            class_id=FaultClass.NO,
            severity=0.0,
            onset_step=config.onset_step,
            seed=derive_seed(config.seed, "steady", run),
            repetition=run,
        ))
    for fault in sorted(set(config.classes), key=int):
        for sev_idx, severity in enumerate(config.severity_grid()):
            for rep in range(config.repetitions):
                specs.append(ScenarioSpec(
                    class_id=fault,
                    severity=severity,
                    onset_step=config.onset_step,
                    seed=derive_seed(config.seed, "scenario", int(fault), sev_idx, rep),
                    severity_index=sev_idx,
                    repetition=rep,
                ))
    return specs


def generate_dataset(config: GeneratorConfig) -> List[TimeSeries]:
    specs = enumerate_scenarios(config)
    if not specs:
        raise ValueError("Generator config is empty: no accident classes and steady_runs=0")

    series = [generate_scenario(spec, config.n_vars, config.n_steps) for spec in specs]
    logger.info(
        f"[DATA] Generated scenarios count={len(series)} classes={[c.name for c in config.classes]} "
        f"n_vars={config.n_vars} n_steps={config.n_steps}"
    )
    return series
