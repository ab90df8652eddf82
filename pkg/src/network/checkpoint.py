import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from plant_data.models import NormalizerStats, PreparedDataset
from utils.config import TOOL_VERSION
from utils.serialization import read_container, write_container
from .constants import CHECKPOINT_FORMAT, CHECKPOINT_VERSION
from .etcn import ETCNModel
from .models import NetworkConfig, NetworkParams

logger = logging.getLogger(__name__)

_PARAM = "param__"
_BUFFER = "buffer__"


def save_checkpoint(path: Path, model: ETCNModel, normalizer: NormalizerStats, width: int, step: int,
                    extra: Optional[Dict[str, Any]] = None) -> Path:
    """Config, weights, BN running statistics and the preprocessing the model was trained with."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "tool_version": TOOL_VERSION,
        "config": model.config.model_dump(mode="json"),
        "normalizer": normalizer.model_dump(),
        "window_width": width,
        "window_step": step,
        "shapes": {name: list(a.shape) for name, a in model.params.weights.items()},
        "extra": extra or {},
    }
    arrays = {f"{_PARAM}{k}": v for k, v in model.params.weights.items()}
    arrays.update({f"{_BUFFER}{k}": v for k, v in model.params.buffers.items()})
    write_container(path, header, arrays)
    logger.info(f"[NET] Saved checkpoint path={path} params={model.params.n_parameters()}")
    return Path(path)


def load_checkpoint(path: Path) -> Tuple[ETCNModel, Dict[str, Any]]:
    header, arrays = read_container(path)
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a model checkpoint (format={header.get('format')!r})")
    if header.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"Unsupported checkpoint version {header.get('version')} in {path}")

    params = NetworkParams(
        weights={k[len(_PARAM):]: v for k, v in arrays.items() if k.startswith(_PARAM)},
        buffers={k[len(_BUFFER):]: v for k, v in arrays.items() if k.startswith(_BUFFER)},
    )
    model = ETCNModel(NetworkConfig(**header["config"]), params)
    return model, header


def check_compatible(header: Dict[str, Any], dataset: PreparedDataset) -> None:
    """A checkpoint only applies to data windowed and normalized the way it was trained on."""
    if header["window_width"] != dataset.width:
        raise ValueError(f"Checkpoint width {header['window_width']} != dataset width {dataset.width}")
    if NormalizerStats(**header["normalizer"]) != dataset.normalizer:
        raise ValueError("Checkpoint normalizer statistics differ from the dataset's")
    if header["config"]["n_vars"] != dataset.n_vars:
        raise ValueError(f"Checkpoint expects {header['config']['n_vars']} variables, dataset has {dataset.n_vars}")
