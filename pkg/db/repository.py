import json
import os
import sys
from datetime import datetime
from typing import Any, Dict, IO, Iterable, Optional

import numpy as np
import pandas as pd

from db.models import RunRecord, TensorRecord
from src.core.errors import InputError
from src.core.tensor import MeixnerSpec
from src.logging.log_service import log_audit_event, logger

SAMPLE_COLUMNS = ['x1', 'x2', 'x3']
SAMPLE_FORMATS = ('jsonl', 'csv')


def _reject_constant(name: str):
    raise InputError(f"non-finite number '{name}' in JSON input")


def parse_json(text: str) -> Any:
    """
    Parse JSON text, refusing NaN and Infinity literals.

    Args:
        text: Raw JSON

    Returns:
        The parsed object
    """
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        logger.error(f"Unreadable JSON: {e}")
        raise InputError(f"unreadable JSON: {e}")


def load_tensor_record(path: str) -> TensorRecord:
    """
    Read a tensor file.

    Args:
        path: Path to the tensor JSON file

    Returns:
        The validated TensorRecord
    """
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        logger.error(f"Error reading tensor file {path}: {e}")
        raise InputError(f"cannot read {path}: {e.strerror}")
    return TensorRecord.from_dict(parse_json(text))


def load_spec(path: str) -> MeixnerSpec:
    """Read a tensor file straight into a MeixnerSpec."""
    return load_tensor_record(path).to_spec()


def save_tensor(record: TensorRecord, path: str):
    with open(path, 'w') as f:
        json.dump(record.to_dict(), f, indent=2)
    logger.info(f"Tensor written to {path}")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _finite_only(value):
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, dict):
        return {k: _finite_only(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_only(v) for v in value]
    if isinstance(value, (float, np.floating)) and not np.isfinite(value):
        return None
    return value


def dump_json(payload: Dict[str, Any], stream: Optional[IO] = None, path: Optional[str] = None):
    """
    Serialize a result payload with sorted keys, to a file or a stream.

    Non-finite floats become null so every output stays valid JSON.
    """
    text = json.dumps(_finite_only(payload), sort_keys=True, indent=2, allow_nan=False, default=_jsonable)
    if path is not None:
        with open(path, 'w') as f:
            f.write(text + "\n")
        logger.info(f"Report written to {path}")
    else:
        (stream or sys.stdout).write(text + "\n")


def save_run(record: RunRecord, directory: str) -> str:
    """
    Store a RunRecord as <command>-<timestamp>.json under directory.

    Returns:
        Path of the written file
    """
    os.makedirs(directory, exist_ok=True)
    if record.created_at is None:
        record.created_at = datetime.now()
    name = f"{record.command}-{record.created_at.strftime('%Y%m%dT%H%M%S%f')}.json"
    path = os.path.join(directory, name)
    with open(path, 'w') as f:
        json.dump(_finite_only(record.to_dict()), f, sort_keys=True, indent=2, allow_nan=False,
                  default=_jsonable)
    return path


def load_run(path: str) -> RunRecord:
    with open(path, 'r') as f:
        return RunRecord.from_dict(parse_json(f.read()))


def write_samples(blocks: Iterable[np.ndarray], fmt: str, stream: Optional[IO] = None) -> int:
    """
    Stream sample blocks as JSON lines or CSV, one point per row.

    Blocks are written as they arrive so memory stays bounded by one block.

    Args:
        blocks: Iterable of (m, 3) arrays
        fmt: 'jsonl' or 'csv'
        stream: Destination (stdout by default)

    Returns:
        Number of rows written
    """
    if fmt not in SAMPLE_FORMATS:
        raise InputError(f"unknown sample format '{fmt}'")
    stream = stream or sys.stdout
    rows = 0
    for block in blocks:
        frame = pd.DataFrame(block, columns=SAMPLE_COLUMNS)
        if fmt == 'csv':
            frame.to_csv(stream, header=(rows == 0), index=False, float_format='%.17g')
        else:
            text = frame.to_json(orient='records', lines=True, double_precision=15)
            stream.write(text if text.endswith("\n") else text + "\n")
        rows += len(frame)
    log_audit_event("SAMPLES_WRITTEN", {'rows': rows, 'format': fmt})
    return rows


def read_samples(path: str) -> np.ndarray:
    """Read a CSV or JSONL sample file back into an (n, 3) array."""
    if path.endswith('.csv'):
        frame = pd.read_csv(path)
    else:
        frame = pd.read_json(path, orient='records', lines=True)
    return frame[SAMPLE_COLUMNS].to_numpy(dtype=float)
