from enum import Enum
from typing import Dict, List, NamedTuple


class FaultClass(int, Enum):
    """
    Operating scenarios, with their class ids as used in labels.
    """
    NO = 0
    LOCA = 1
    MSLB = 2
    SGTR = 3

    @classmethod
    def from_name(cls, name: str) -> "FaultClass":
        key = name.strip().upper()
        if key not in cls.__members__:
            raise ValueError(f"Unknown fault class: {name!r} (expected one of {list(cls.__members__)})")
        return cls[key]


ACCIDENT_CLASSES = (FaultClass.LOCA, FaultClass.MSLB, FaultClass.SGTR)
N_CLASSES = len(FaultClass)

SEVERITY_MIN = 0.025
SEVERITY_MAX = 0.50
DEFAULT_N_SEVERITIES = 20
DEFAULT_ONSET_STEP = 40
DEFAULT_N_STEPS = 900
DEFAULT_N_VARS = 26
SAMPLE_PERIOD_S = 1.0

# Steady-state wander: AR(1) with relative innovation std, clipped to +/- half the band.
STEADY_BAND = 0.01
WANDER_PHI = 0.98
WANDER_SIGMA = 2.0e-4

DEFAULT_WINDOW_WIDTH = 120
DEFAULT_WINDOW_STEP = 1
DEFAULT_NOISE_FRACTION = 0.05
DEFAULT_SPLIT_RATIOS = (6, 2, 2)
DEFAULT_ANALYSIS_WIDTHS = (60, 120, 180, 240, 300)
MIN_SAMPLES_PER_CLASS = 5


class PlantVariable(NamedTuple):
    name: str
    unit: str
    nominal: float
    group: str
    loop: int  # 0 for plant-wide channels


def _looped(name: str, unit: str, nominal: float, group: str) -> List[PlantVariable]:
    # Loops 2 and 3 sit slightly off loop 1
    return [
        PlantVariable(f"{loop}#{name}", unit, nominal * (1.0 + 0.002 * (loop - 1)), group, loop)
        for loop in (1, 2, 3)
    ]


PLANT_VARIABLES: List[PlantVariable] = (
    _looped("Hot-leg temperature", "°C", 327.0, "hot_leg_temp")
    + _looped("Cold-leg temperature", "°C", 292.0, "cold_leg_temp")
    + _looped("Coolant flow rate", "t/h", 23790.0, "coolant_flow")
    + _looped("SG steam flow rate", "t/h", 1960.0, "sg_steam_flow")
    + _looped("SG pressure", "MPa", 6.7, "sg_pressure")
    + _looped("SG level (wide range)", "m", 12.5, "sg_level_wide")
    + _looped("SG level (narrow range)", "m", 1.2, "sg_level_narrow")
    + [
        PlantVariable("Total power", "MW", 2895.0, "total_power", 0),
        PlantVariable("Reactor operating pressure", "MPa", 15.5, "reactor_pressure", 0),
        PlantVariable("Reactor outlet temperature", "°C", 327.5, "reactor_outlet_temp", 0),
        PlantVariable("Pressurizer pressure", "MPa", 15.4, "pzr_pressure", 0),
        PlantVariable("Pressurizer level", "m", 6.1, "pzr_level", 0),
    ]
)

# Relative post-onset offsets at the top of the severity range, per channel group.
# Tuple entries are (loop 1, loops 2/3); plant-wide groups use a single value.
# Loop 1 is the rupture location.
RESPONSE_PATTERNS: Dict[FaultClass, Dict[str, object]] = {
    FaultClass.LOCA: {
        "hot_leg_temp": (-0.10, -0.07),
        "cold_leg_temp": (-0.04, -0.03),
        "coolant_flow": (-0.25, -0.12),
        "sg_steam_flow": (-0.30, -0.28),
        "sg_pressure": (0.05, 0.05),
        "sg_level_wide": (-0.08, -0.06),
        "sg_level_narrow": (-0.15, -0.12),
        "total_power": -0.50,
        "reactor_pressure": -0.60,
        "reactor_outlet_temp": -0.09,
        "pzr_pressure": -0.62,
        "pzr_level": -0.85,
    },
    FaultClass.MSLB: {
        "hot_leg_temp": (-0.07, -0.05),
        "cold_leg_temp": (-0.18, -0.10),
        "coolant_flow": (-0.02, -0.02),
        "sg_steam_flow": (1.40, -0.20),
        "sg_pressure": (-0.60, -0.22),
        "sg_level_wide": (-0.55, 0.04),
        "sg_level_narrow": (-0.70, 0.06),
        "total_power": 0.08,
        "reactor_pressure": -0.28,
        "reactor_outlet_temp": -0.06,
        "pzr_pressure": -0.30,
        "pzr_level": -0.45,
    },
    FaultClass.SGTR: {
        "hot_leg_temp": (-0.03, -0.02),
        "cold_leg_temp": (-0.01, -0.01),
        "coolant_flow": (-0.03, -0.01),
        "sg_steam_flow": (-0.10, -0.03),
        "sg_pressure": (0.08, 0.01),
        "sg_level_wide": (0.45, 0.01),
        "sg_level_narrow": (0.60, 0.02),
        "total_power": -0.10,
        "reactor_pressure": -0.24,
        "reactor_outlet_temp": -0.02,
        "pzr_pressure": -0.25,
        "pzr_level": -0.50,
    },
}

# First-order time constants (seconds) at the bottom of the severity range.
BASE_TIME_CONSTANTS: Dict[FaultClass, float] = {
    FaultClass.LOCA: 60.0,
    FaultClass.MSLB: 40.0,
    FaultClass.SGTR: 120.0,
}
