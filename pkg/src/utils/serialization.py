import io
import os
import json
import zipfile
import logging
import tempfile
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Fixed timestamp for every zip member so identical payloads give identical bytes.
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)
HEADER_NAME = "header.json"


def dumps_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Writes to a temp file in the target directory, then renames over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: Path, payload: Any) -> None:
    atomic_write_text(path, dumps_json(payload))


def read_json(path: Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Missing required file: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def write_container(path: Path, header: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> None:
    """
    Writes a zip container holding header.json plus one .npy member per array.

    Members are stored uncompressed in sorted order with a fixed timestamp,
    so the output is a pure function of (header, arrays).
    """
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo(HEADER_NAME, date_time=_ZIP_EPOCH)
        zf.writestr(info, dumps_json(header))
        for name in sorted(arrays):
            member = io.BytesIO()
            np.lib.format.write_array(member, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=_ZIP_EPOCH), member.getvalue())
    atomic_write_bytes(path, buffer.getvalue())
    logger.debug(f"[IO] Wrote container {path} arrays={len(arrays)}")


def read_container(path: Path) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Missing required file: {path}")
    arrays: Dict[str, np.ndarray] = {}
    with zipfile.ZipFile(path, "r") as zf:
        names = zf.namelist()
        if HEADER_NAME not in names:
            raise ValueError(f"{path} is not a valid container (no {HEADER_NAME})")
        header = json.loads(zf.read(HEADER_NAME).decode("utf-8"))
        for name in names:
            if not name.endswith(".npy"):
                continue
            with zf.open(name) as f:
                arrays[name[: -len(".npy")]] = np.lib.format.read_array(io.BytesIO(f.read()), allow_pickle=False)
    return header, arrays
