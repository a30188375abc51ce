"""
Console progress and artifact writers

Console output follows one layout everywhere: "=" rules around step
headers, one emoji-tagged line per event. Artifacts are written to a
temporary file in the target directory and moved into place, so an
interrupted run never leaves a half-written CSV behind.
"""

from __future__ import annotations

import json
import os
import platform
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import joblib
import numpy as np
import pandas as pd
import scipy

from .config import FLOAT_FORMAT, ScenarioConfig

RULE = "=" * 80
SECTION = "-" * 80


def banner(title: str) -> None:
    print(f"\n{RULE}")
    print(title)
    print(RULE)


def step(number: int, title: str) -> None:
    banner(f"STEP {number}: {title}")


def status(icon: str, message: str) -> None:
    print(f"{icon} {message}")


def _atomic_write(path: Path, write) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """CSV with lossless float formatting, written atomically"""
    out = _atomic_write(path, lambda f: frame.to_csv(f, index=False, float_format=FLOAT_FORMAT))
    print(f"✅ Saved {out.name}: {len(frame)} rows")
    return out


def write_text(lines: Iterable[str], path: Path) -> Path:
    out = _atomic_write(path, lambda f: f.write("\n".join(lines) + "\n"))
    print(f"✅ Saved {out.name}")
    return out


def versions() -> Dict[str, str]:
    from . import __version__

    return {
        "patchlab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "joblib": joblib.__version__,
    }


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars and arrays become Python numbers and lists"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_manifest(
    path: Path,
    command: str,
    cfg: ScenarioConfig,
    wall_time: float,
    results: Optional[Dict[str, Any]] = None,
    files: Iterable[Path] = (),
    error: Optional[str] = None,
) -> Path:
    """JSON manifest: resolved config, library versions, timing, results, file list"""
    manifest = {
        "metadata": {
            "command": command,
            "config_file": cfg.source,
            "wall_time_seconds": round(wall_time, 3),
            "versions": versions(),
        },
        "config": cfg.resolved(),
        "results": results or {},
        "files": sorted(Path(p).name for p in files),
        "error": error,
    }
    out = _atomic_write(path, lambda f: json.dump(_plain(manifest), f, ensure_ascii=False, indent=2))
    print(f"✅ Saved manifest: {out.name}")
    return out


def classification_report(title: str, lines: Iterable[str]) -> list:
    """Report body for the classify command: header block then one line per entry"""
    body = [RULE, title, RULE, ""]
    body += list(lines)
    body += ["", SECTION]
    return body
