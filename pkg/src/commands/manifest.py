import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from utils.config import TOOL_VERSION
from utils.serialization import read_json, write_json

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


class CommandResult(BaseModel):
    """What a command handler reports back to the app once its outputs are written."""
    out_dir: Path
    config: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    command: str
    argv: List[str]
    cwd: str
    out_dir: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    tool_version: str = TOOL_VERSION
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    started_at_utc: str
    started_at_display: str
    display_timezone: str
    duration_seconds: float


def manifest_path(out_dir: Path, command: str) -> Path:
    return Path(out_dir) / f"{command}{MANIFEST_SUFFIX}"


def write_manifest(manifest: RunManifest) -> Path:
    path = manifest_path(Path(manifest.out_dir), manifest.command)
    write_json(path, manifest.model_dump(mode="json"))
    logger.info(f"[CLI] Wrote manifest path={path} duration={manifest.duration_seconds:.2f}s")
    return path


def read_manifest(path: Path) -> RunManifest:
    return RunManifest(**read_json(path))
