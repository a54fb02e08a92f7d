"""
Utility functions for result files and argument parsing.
"""

import os
import csv
import json
import logging
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Sequence

import numpy as np

from .exceptions import ConfigurationError


logger = logging.getLogger(__name__)


def ensure_dir(directory: str) -> Path:
    """
    Ensure directory exists, create if it doesn't.

    Args:
        directory: Directory path

    Returns:
        Path object
    """
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def validate_file_exists(filepath: str, file_type: str = "File") -> bool:
    """
    Validate that a file exists.

    Args:
        filepath: Path to file
        file_type: Type of file for error message

    Returns:
        True if exists, raises FileNotFoundError otherwise
    """
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"{file_type} not found: {filepath}")
    return True


def format_duration(seconds: float) -> str:
    """
    Format a duration in seconds to human-readable format.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted string (e.g., "1m 30s", "2.41s")
    """
    minutes = int(seconds // 60)
    rest = seconds - 60 * minutes
    if minutes > 0:
        return f"{minutes}m {rest:.0f}s"
    return f"{rest:.2f}s"


def format_number(value: Any, digits: int = 17) -> str:
    """Floats with ``digits`` significant digits; everything else through str()."""
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{digits}g")
    return str(value)


@contextmanager
def atomic_write(path: str) -> Iterator[Any]:
    """
    Open a temporary file next to ``path`` and move it into place on success.

    Nothing is left behind when writing fails.
    """
    target = Path(path)
    if not target.parent.is_dir():
        raise FileNotFoundError(f"Output directory does not exist: {target.parent}")
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as f:
            yield f
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix_csv(path: str, matrix: np.ndarray, digits: int = 17) -> str:
    """Write a 1D or 2D array as CSV, one row per line."""
    array = np.atleast_2d(np.asarray(matrix, dtype=float))
    with atomic_write(path) as f:
        writer = csv.writer(f)
        for row in array:
            writer.writerow([format_number(float(v), digits) for v in row])
    logger.info(f"Wrote {array.shape[0]}x{array.shape[1]} matrix to {path}")
    return str(path)


def write_rows_csv(path: str, header: Sequence[str], rows: Iterable[Dict[str, Any]], digits: int = 17) -> str:
    """Write dictionaries as CSV with a header line."""
    rows = list(rows)
    with atomic_write(path) as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(row[key], digits) for key in header])
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return str(path)


def read_matrix_csv(path: str) -> np.ndarray:
    """Read a matrix written by write_matrix_csv."""
    with open(path, "r", encoding="utf-8") as f:
        return np.array([[float(v) for v in row] for row in csv.reader(f) if row])


def write_json(path: str, data: Dict[str, Any]) -> str:
    """Write a JSON sidecar with sorted keys."""
    with atomic_write(path) as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    logger.debug(f"Wrote metadata to {path}")
    return str(path)


def read_json(path: str) -> Dict[str, Any]:
    validate_file_exists(path, "Metadata file")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def parse_mesh_spec(spec: str, T: float, sigma: float = 0.17) -> Dict[str, Any]:
    """
    Parse ``uniform:N``, ``geometric:N[:sigma]``, ``dyadic:N`` or ``explicit:t0,t1,...``.

    Returns:
        Mapping accepted by mesh.mesh_from_spec
    """
    kind, _, rest = str(spec).partition(":")
    kind = kind.strip()
    try:
        if kind in ("uniform", "dyadic"):
            return {"kind": kind, "N": int(rest), "T": T}
        if kind == "geometric":
            parts = rest.split(":")
            return {
                "kind": kind,
                "N": int(parts[0]),
                "T": T,
                "sigma": float(parts[1]) if len(parts) > 1 else sigma,
            }
        if kind == "explicit":
            points = [float(v) for v in rest.split(",") if v.strip()]
            return {"kind": kind, "breakpoints": points, "T": points[-1] if points else T}
    except (ValueError, IndexError):
        raise ConfigurationError(f"cannot parse mesh spec '{spec}'") from None
    raise ConfigurationError(f"unknown mesh spec '{spec}' (uniform:N | geometric:N[:sigma] | dyadic:N | explicit:...)")


def parse_int_range(spec: str) -> List[int]:
    """Parse ``a..b`` or ``a:b`` (inclusive) or a single integer."""
    text = str(spec).replace("..", ":")
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":", 1))
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise ConfigurationError(f"cannot parse integer range '{spec}'") from None
