"""
Input helpers for the command line and the dashboard
Parsing of comma-separated lists and rejection of non-finite values
"""

import math
from typing import List, Optional, Sequence

from src.core.errors import InputError
from src.logging.log_service import logger


def ensure_finite(values: Sequence[float], what: str = "value") -> List[float]:
    """
    Reject NaN and infinite entries

    Args:
        values: Numbers to check
        what: Name used in the error message

    Returns:
        The values as floats
    """
    out = []
    for v in values:
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise InputError(f"{what} contains a non-numeric entry: {v!r}")
        if not math.isfinite(v):
            logger.warning(f"Rejected non-finite {what}: {v}")
            raise InputError(f"{what} contains a non-finite entry ({v})")
        out.append(v)
    return out


def parse_float_list(text: str, what: str = "list", length: Optional[int] = None) -> List[float]:
    """
    Parse "1.0,-2,3e-3" into floats

    Args:
        text: Comma-separated numbers
        what: Name used in error messages
        length: Required number of entries, if any

    Returns:
        List of finite floats
    """
    parts = [p.strip() for p in str(text).split(',') if p.strip()]
    if not parts:
        raise InputError(f"{what} is empty")
    values = ensure_finite(parts, what)
    if length is not None and len(values) != length:
        raise InputError(f"{what} needs {length} entries, got {len(values)}")
    return values


def parse_index_list(text: str, what: str = "index") -> List[int]:
    """Parse "2,0,1" into non-negative integers."""
    parts = [p.strip() for p in str(text).split(',') if p.strip()]
    if not parts:
        raise InputError(f"{what} is empty")
    out = []
    for p in parts:
        try:
            value = int(p)
        except ValueError:
            raise InputError(f"{what} entry '{p}' is not an integer")
        if value < 0:
            raise InputError(f"{what} entry {value} is negative")
        out.append(value)
    return out


def parse_seed(value) -> int:
    """Seeds are unsigned 64-bit integers."""
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise InputError(f"seed '{value}' is not an integer")
    if not 0 <= seed < 2 ** 64:
        raise InputError(f"seed {seed} is outside the unsigned 64-bit range")
    return seed
