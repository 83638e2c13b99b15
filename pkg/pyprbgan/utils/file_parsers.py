"""
Readers for configuration text and experiment artifacts
"""

from pathlib import Path
from typing import Any, Dict, List, Tuple
import json
import logging

import numpy as np
import pandas as pd

from pyprbgan.core.errors import ConfigError, ContractError
from pyprbgan.evaluation.histogram import Histogram

logger = logging.getLogger(__name__)

Sections = Dict[str, Dict[str, str]]
LineMap = Dict[Tuple[str, ...], int]


def parse_config_text(text: str) -> Tuple[Sections, LineMap]:
    """
    Parse the key = value / [section] configuration format

    Blank lines and lines starting with '#' or ';' are ignored. Inline
    comments start with ' #'.

    Args:
        text: File contents

    Returns:
        Tuple of (sections, lines) where sections maps section -> key -> raw
        string and lines maps (section,) and (section, key) to 1-based lines

    Raises:
        ConfigError: On malformed lines, keys outside a section or duplicates

    Example:
        >>> sections, lines = parse_config_text("[gan]\\nn_mc = 20\\n")
        >>> sections["gan"]["n_mc"]
        '20'
        >>> lines[("gan", "n_mc")]
        2
    """
    sections: Sections = {}
    lines: LineMap = {}
    current = None

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(" #", 1)[0].strip()
        if not line or line.startswith(("#", ";")):
            continue

        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"Malformed section header '{raw.strip()}'", line=number)
            current = line[1:-1].strip().lower()
            if current in sections:
                raise ConfigError(f"Duplicate section [{current}]", line=number)
            sections[current] = {}
            lines[(current,)] = number
            continue

        if "=" not in line:
            raise ConfigError(f"Expected 'key = value', got '{raw.strip()}'", line=number)
        if current is None:
            raise ConfigError("Key outside of any [section]", line=number)

        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("Empty key", line=number)
        if key in sections[current]:
            raise ConfigError(f"Duplicate key '{key}' in [{current}]", line=number)
        sections[current][key] = value
        lines[(current, key)] = number

    return sections, lines


def read_config_text(file_path: Path) -> Tuple[Sections, LineMap]:
    """Read and parse a key = value configuration file"""
    file_path = Path(file_path)
    if not file_path.exists():
        raise ConfigError(f"Config file not found: {file_path}")
    return parse_config_text(file_path.read_text(encoding="utf-8"))


def split_list(value: str) -> List[str]:
    """'a, b, c' -> ['a', 'b', 'c']"""
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_vectors(value: str) -> List[List[float]]:
    """
    Parse a comma list of vectors with whitespace separated coordinates

    Example:
        >>> parse_vectors("0 0, 2 0, 0 2")
        [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]
    """
    return [[float(x) for x in item.split()] for item in split_list(value)]


def read_samples_csv(file_path: Path) -> np.ndarray:
    """
    Read generated samples written by write_samples_csv (or any numeric CSV)

    Returns:
        [n x dim] array

    Raises:
        ContractError: If the file is missing, empty or non-numeric
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise ContractError(f"Samples file not found: {file_path}")

    df = pd.read_csv(file_path, float_precision="round_trip")
    if df.empty:
        raise ContractError(f"No samples in {file_path}")
    try:
        values = df.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise ContractError(f"Non-numeric samples in {file_path}: {e}") from e

    logger.debug(f"Read {values.shape[0]} samples of width {values.shape[1]} from {file_path}")
    return values


def read_histogram_csv(file_path: Path) -> Histogram:
    """
    Read a histogram written by write_histogram_csv

    The out-of-range mass is stored in the bin-less trailing row, if present.
    """
    df = pd.read_csv(file_path, float_precision="round_trip")
    if list(df.columns) != ["bin_lo", "bin_hi", "count"]:
        raise ContractError(f"Unexpected histogram header {list(df.columns)} in {file_path}")

    bins = df.dropna(subset=["bin_lo", "bin_hi"])
    extra = df[df["bin_lo"].isna()]
    counts = bins["count"].to_numpy(dtype=np.int64)
    edges = np.append(bins["bin_lo"].to_numpy(dtype=np.float64), bins["bin_hi"].iloc[-1])
    out_of_range = int(extra["count"].sum()) if not extra.empty else 0
    return Histogram(edges=edges, counts=counts, total=int(counts.sum()) + out_of_range)


def read_report_text(file_path: Path) -> Dict[str, str]:
    """Read a 'key: value' report into a dict of raw strings"""
    report: Dict[str, str] = {}
    for raw in Path(file_path).read_text(encoding="utf-8").splitlines():
        if ":" in raw:
            key, value = raw.split(":", 1)
            report[key.strip()] = value.strip()
    return report


def read_telemetry(file_path: Path) -> pd.DataFrame:
    """Read a newline-delimited JSON telemetry file"""
    records: List[Dict[str, Any]] = []
    with open(file_path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                records.append(json.loads(line))
    return pd.json_normalize(records)
