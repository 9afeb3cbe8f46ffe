"""Reading experiment configs, writing result tables and fanning out work."""

import json
import multiprocessing as mp
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from tqdm import tqdm

from bridgelab.config import CSV_DIGITS
from bridgelab.exceptions import ConfigError


def read_config_file(path):
    """Parse a flat key=value config file.

    Blank lines and text after '#' are ignored. Keys are dotted
    (`physics.hbar`); values are kept as strings for build_config to coerce.

    Args:
        path: Path to the config file.

    Returns:
        Dict of key to raw string value, in file order.

    Raises:
        ConfigError: unreadable file, malformed line or repeated key.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def format_value(value):
    """Text form of one table cell: 17 significant digits for floats."""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format(float(value), f".{CSV_DIGITS}g")


def _csv_text(record):
    lines = [",".join(record.columns)]
    lines.extend(",".join(format_value(v) for v in row) for row in record.rows)
    return "\n".join(lines) + "\n"


def _json_value(value):
    if isinstance(value, (str, int)):
        return value
    return float(value)


def _json_text(record):
    payload = {
        "columns": list(record.columns),
        "rows": [[_json_value(v) for v in row] for row in record.rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def write_record(record, path, fmt="csv"):
    """Write a record as CSV or JSON.

    The text goes to a temporary file next to `path` that is renamed into
    place, so a failed run never leaves a partial table behind.

    Args:
        record: Object with `columns` and `rows`.
        path: Destination file.
        fmt: "csv" or "json".

    Returns:
        The destination Path.
    """
    if fmt == "csv":
        text = _csv_text(record)
    elif fmt == "json":
        text = _json_text(record)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def ordered_parallel_map(func, items, max_workers=None, progress=False, desc=None):
    """Map func over items in worker processes, returning results in input order.

    With max_workers of 1 or fewer, a single item, or a pool that cannot be
    started, the map runs sequentially in this process.

    Args:
        func: Picklable callable of one argument.
        items: Sequence of arguments.
        max_workers: Maximum number of worker processes. If None, uses CPU count.
        progress: Show a tqdm progress bar.
        desc: Label for the progress bar.
    """
    items = list(items)
    if max_workers is None:
        max_workers = min(len(items), mp.cpu_count())

    def sequential():
        return [func(item) for item in tqdm(items, desc=desc, disable=not progress)]

    if max_workers <= 1 or len(items) <= 1:
        return sequential()

    try:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            results = executor.map(func, items)
            return list(tqdm(results, total=len(items), desc=desc, disable=not progress))
    except (OSError, RuntimeError) as e:
        print(f"Error in parallel processing, falling back to sequential: {e}", file=sys.stderr)
        return sequential()
