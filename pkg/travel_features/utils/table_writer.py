"""
Tabular and plot-data emission.

Every CSV the toolkit produces goes through `write_frame`, which writes to a
temporary file in the destination directory and renames it on success, so a
failed stage never leaves a partially written output behind.
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
import yaml

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def write_frame(
    df: pd.DataFrame,
    path: Union[str, Path],
    header_comment: Optional[str] = None,
    float_format: Optional[str] = FLOAT_FORMAT,
) -> Path:
    """
    Atomically write a DataFrame as UTF-8 CSV without the index.

    Args:
        df: Table to write
        path: Destination file
        header_comment: Optional text emitted as leading `# ...` lines
        float_format: printf-style float format; None keeps full precision

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            if header_comment:
                for line in header_comment.splitlines():
                    f.write(f"# {line}\n")
            df.to_csv(f, index=False, float_format=float_format, lineterminator="\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise

    logger.debug(f"Wrote {len(df)} rows to {path}")
    return path


def write_records(
    rows: Sequence[Dict[str, Any]],
    path: Union[str, Path],
    columns: List[str],
    header_comment: Optional[str] = None,
) -> Path:
    """Write a list of dict rows with a fixed column order (empty lists keep the header)"""
    return write_frame(pd.DataFrame(list(rows), columns=columns), path, header_comment=header_comment)


def write_yaml(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    """Atomically dump a mapping as YAML with sorted keys"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            yaml.safe_dump(data, f, sort_keys=True, default_flow_style=False)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def read_frame(path: Union[str, Path], **kwargs) -> pd.DataFrame:
    """Read a CSV written by write_frame, skipping only its leading `# ` header lines"""
    skip = 0
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            skip += 1
    return pd.read_csv(path, skiprows=skip, encoding="utf-8", **kwargs)
