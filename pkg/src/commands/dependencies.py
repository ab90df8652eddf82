import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from network.models import NetworkConfig
from plant_data.models import PreparedDataset
from utils.config import default_output_dir, read_config_file
from .registry import arg

logger = logging.getLogger(__name__)


# --- Arguments shared by several commands ---
def out_arg(command: str):
    return arg("--out", type=Path, default=None,
               help=f"Output directory (default: $ETCN_OUTPUT_DIR/{command})")


SEED_ARG = arg("--seed", type=int, default=0, help="Root seed for every random stream")
JOBS_ARG = arg("--jobs", type=int, default=1, help="Worker processes for independent training runs")
PLOT_ARG = arg("--plot", action="store_true", help="Also write SVG line plots")

NETWORK_ARGS = [
    arg("--channels", dest="tcn_channels", type=int, help="Channels per TCN convolution"),
    arg("--kernel-size", dest="tcn_kernel_size", type=int, help="TCN kernel size"),
    arg("--dilations", dest="tcn_dilations", type=str, help="Comma-separated dilation per TCN block"),
    arg("--dropout", dest="dropout_rate", type=float, help="Dropout rate inside TCN blocks"),
    arg("--attention-dim", dest="attention_dim", type=int, help="Query/key dimension of self-attention"),
]
NETWORK_FIELDS = ["tcn_channels", "tcn_kernel_size", "tcn_dilations", "dropout_rate", "attention_dim"]


def resolve_out_dir(args: argparse.Namespace, command: str) -> Path:
    out_dir = Path(args.out) if args.out is not None else default_output_dir(command)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def overrides(args: argparse.Namespace, fields: Sequence[str]) -> Dict[str, Any]:
    """Flags the user actually passed, keyed by field name."""
    return {f: getattr(args, f) for f in fields if getattr(args, f, None) is not None}


def merged_config(config_path: Optional[Path], cli_values: Dict[str, Any]) -> Dict[str, Any]:
    """key=value file values, overridden by explicit command-line values."""
    values: Dict[str, Any] = dict(read_config_file(config_path)) if config_path else {}
    values.update(cli_values)
    return values


def parse_ratios(text: str) -> List[float]:
    """'6:2:2' -> [6.0, 2.0, 2.0]"""
    try:
        ratios = [float(p) for p in text.split(":")]
    except ValueError:
        raise ValueError(f"Split ratios must look like 6:2:2, got {text!r}") from None
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ValueError(f"Split ratios must be three non-negative numbers with a positive sum, got {text!r}")
    return ratios


def network_config_for(dataset: PreparedDataset, values: Dict[str, Any], variant: Optional[str] = None) -> NetworkConfig:
    """Network config for a dataset; input geometry comes from the dataset unless the file pins it."""
    values = dict(values)
    values.setdefault("n_vars", dataset.n_vars)
    values.setdefault("window_width", dataset.width)
    config = NetworkConfig.variant(variant, **values) if variant else NetworkConfig(**values)
    if config.window_width != dataset.width:
        raise ValueError(f"Network window_width {config.window_width} != dataset width {dataset.width}")
    return config


def as_strings(paths: Sequence[Path]) -> List[str]:
    return [str(Path(p)) for p in paths]
