import os
import logging
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import load_dotenv, dotenv_values

from .serialization import atomic_write_text

logger = logging.getLogger(__name__)

# Load environment variables from .env file
load_dotenv()

# --- Runtime settings ---
OUTPUT_DIR = os.getenv("ETCN_OUTPUT_DIR", "outputs")
LOG_LEVEL = os.getenv("ETCN_LOG_LEVEL", "INFO")
DISPLAY_TIMEZONE = os.getenv("ETCN_DISPLAY_TIMEZONE", "UTC")
REDIS_URL = os.getenv("REDIS_URL")
FITNESS_CACHE_TTL = int(os.getenv("ETCN_FITNESS_CACHE_TTL", "86400"))

TOOL_VERSION = "1.0.0"


def default_output_dir(subdir: Optional[str] = None) -> Path:
    """Resolve the default output directory, honouring ETCN_OUTPUT_DIR."""
    base = Path(os.getenv("ETCN_OUTPUT_DIR", OUTPUT_DIR))
    return base / subdir if subdir else base


def read_config_file(path: Path) -> Dict[str, str]:
    """
    Reads a key=value config file.

    The same syntax as a .env file is accepted (comments, quoting, blank lines).
    Keys are lower-cased so they line up with pydantic field names.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Missing config file: {path}")
    raw = dotenv_values(path)
    values = {k.strip().lower(): v for k, v in raw.items() if v is not None and v.strip() != ""}
    if not values:
        raise ValueError(f"Config file {path} is empty")
    logger.debug(f"[CONFIG] Loaded {len(values)} keys from {path}")
    return values


def write_config_file(path: Path, values: Dict[str, object]) -> None:
    """Writes a key=value config file readable by read_config_file."""
    lines = []
    for key in sorted(values):
        value = values[key]
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key}={value}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def split_csv_list(value: object) -> object:
    """Turns '1,2,4' into ['1','2','4']; leaves non-strings untouched."""
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


def parse_int_list(value: str) -> List[int]:
    return [int(v) for v in split_csv_list(value)]
