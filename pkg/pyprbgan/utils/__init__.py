"""
Utility functions for PyPrbGAN
"""

from pyprbgan.utils.file_parsers import (
    parse_config_text,
    read_config_text,
    read_samples_csv,
    read_histogram_csv,
    read_report_text,
    read_telemetry,
)
from pyprbgan.utils.output_writers import (
    TelemetryWriter,
    write_histogram_csv,
    write_samples_csv,
    write_report_text,
    write_json,
    format_report,
)

__all__ = [
    "parse_config_text",
    "read_config_text",
    "read_samples_csv",
    "read_histogram_csv",
    "read_report_text",
    "read_telemetry",
    "TelemetryWriter",
    "write_histogram_csv",
    "write_samples_csv",
    "write_report_text",
    "write_json",
    "format_report",
]
