"""
Writers for experiment artifacts

Floats are written with repr precision so every file reads back exactly.
"""

from pathlib import Path
from typing import Any, Dict, Optional, TextIO
import json
import logging

import numpy as np
import pandas as pd

from pyprbgan.evaluation.coverage import ModeCoverageReport
from pyprbgan.evaluation.histogram import Histogram

logger = logging.getLogger(__name__)


def make_json_serializable(obj: Any) -> Any:
    """Convert numpy and Path values into plain Python types"""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, dict):
        return {k: make_json_serializable(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [make_json_serializable(item) for item in obj]
    elif isinstance(obj, Path):
        return str(obj)
    else:
        return obj


def write_json(file_path: Path, data: Any) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(make_json_serializable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return file_path


class TelemetryWriter:
    """
    Append-only newline-delimited JSON records

    Each record is flushed as it is written, so an aborted run keeps every
    line up to the failure.
    """

    def __init__(self, file_path: Path):
        self.file_path = Path(file_path)
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        self._handle: Optional[TextIO] = open(self.file_path, "w", encoding="utf-8")
        self.n_records = 0

    def write(self, record: Dict[str, Any]) -> None:
        if self._handle is None:
            raise ValueError(f"Telemetry file {self.file_path} is closed")
        self._handle.write(json.dumps(make_json_serializable(record), sort_keys=True) + "\n")
        self._handle.flush()
        self.n_records += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "TelemetryWriter":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def write_histogram_csv(file_path: Path, hist: Histogram) -> Path:
    """
    Write bin_lo,bin_hi,count rows

    A trailing row with empty bounds carries the out-of-range count when it
    is non-zero.
    """
    df = pd.DataFrame({
        "bin_lo": hist.edges[:-1],
        "bin_hi": hist.edges[1:],
        "count": hist.counts,
    })
    if hist.out_of_range:
        df = pd.concat([df, pd.DataFrame({"bin_lo": [np.nan], "bin_hi": [np.nan],
                                          "count": [hist.out_of_range]})], ignore_index=True)
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(file_path, index=False, float_format="%.17g")
    return file_path


def write_samples_csv(file_path: Path, samples: np.ndarray) -> Path:
    """Write [n x dim] samples with columns x0, x1, ..."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    df = pd.DataFrame(samples, columns=[f"x{i}" for i in range(samples.shape[1])])
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(file_path, index=False, float_format="%.17g")
    return file_path


def format_report(report: ModeCoverageReport) -> str:
    """Render a coverage report as 'key: value' lines"""
    lines = [
        f"modes_captured: {report.modes_captured}",
        f"n_modes: {len(report.modes)}",
        f"high_quality_fraction: {report.high_quality_fraction!r}",
        f"jsd: {report.jsd!r}" if report.jsd is not None else "jsd: none",
        f"tau: {report.tau!r}",
        f"n_samples: {report.n_samples}",
    ]
    for i, mode in enumerate(report.modes):
        mean = " ".join(repr(m) for m in mode.mean)
        lines.append(f"mode_{i}.mean: {mean}")
        lines.append(f"mode_{i}.captured: {str(mode.captured).lower()}")
        lines.append(f"mode_{i}.mass_fraction: {mode.mass_fraction!r}")
    return "\n".join(lines) + "\n"


def write_report_text(file_path: Path, report: ModeCoverageReport) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(format_report(report), encoding="utf-8")
    return file_path

