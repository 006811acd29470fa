"""
File utility functions for scenario documents, traces and summaries.
"""

import json
import os
from typing import Optional

import pandas as pd
from pydantic import ValidationError

from matchmarket.config import settings
from matchmarket.exceptions import ScenarioIOError
from matchmarket.schemas.run import RunSummary
from matchmarket.schemas.scenario import ScenarioSchema

ALLOWED_EXTENSIONS = ["json"]


def validate_file_type(file_path: str) -> bool:
    """
    Validate that a scenario file has an allowed extension.

    Args:
        file_path: Path to the scenario file

    Returns:
        True if the extension is allowed
    """
    extension = os.path.splitext(file_path)[1].lower().lstrip(".")
    return extension in ALLOWED_EXTENSIONS


def load_scenario_file(file_path: str) -> ScenarioSchema:
    """
    Read and parse a scenario JSON document.

    Args:
        file_path: Path to the scenario file

    Returns:
        ScenarioSchema

    Raises:
        ScenarioIOError: if the file is missing, unreadable or not JSON
        pydantic.ValidationError: if the document does not match the schema
    """
    if not validate_file_type(file_path):
        raise ScenarioIOError(
            f"Scenario file type not allowed: {file_path}. Allowed types: {', '.join(ALLOWED_EXTENSIONS)}"
        )
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except FileNotFoundError as exc:
        raise ScenarioIOError(f"Scenario file not found: {file_path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioIOError(f"Cannot read scenario file {file_path}: {exc}") from exc
    return ScenarioSchema.model_validate(document)


def save_scenario_file(scenario: ScenarioSchema, file_path: str) -> str:
    """Write a scenario document as JSON; returns the path."""
    _ensure_parent(file_path)
    try:
        with open(file_path, "w", encoding="utf-8") as f:
            f.write(scenario.model_dump_json(indent=2))
    except OSError as exc:
        raise ScenarioIOError(f"Cannot write scenario file {file_path}: {exc}") from exc
    return file_path


def _ensure_parent(file_path: str) -> None:
    parent = os.path.dirname(file_path)
    if parent:
        try:
            os.makedirs(parent, exist_ok=True)
        except OSError as exc:
            raise ScenarioIOError(f"Cannot create directory {parent}: {exc}") from exc


def write_trace_csv(trace: pd.DataFrame, file_path: str, float_format: Optional[str] = None) -> str:
    """
    Write the per-round trace.

    Floats use a fixed format so equal runs give byte-identical files.

    Args:
        trace: trace frame
        file_path: destination
        float_format: printf-style float format; settings value when omitted

    Returns:
        Path to the written file
    """
    _ensure_parent(file_path)
    try:
        trace.to_csv(
            file_path,
            index=False,
            float_format=float_format or settings.trace_float_format,
            lineterminator="\n",
        )
    except OSError as exc:
        raise ScenarioIOError(f"Cannot write trace {file_path}: {exc}") from exc
    return file_path


def read_trace_csv(file_path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(file_path)
    except OSError as exc:
        raise ScenarioIOError(f"Cannot read trace {file_path}: {exc}") from exc


def write_summary_json(summary: RunSummary, file_path: str) -> str:
    """Write the run summary as indented JSON; returns the path."""
    _ensure_parent(file_path)
    try:
        with open(file_path, "w", encoding="utf-8") as f:
            f.write(summary.model_dump_json(indent=2))
    except OSError as exc:
        raise ScenarioIOError(f"Cannot write summary {file_path}: {exc}") from exc
    return file_path


def read_summary_json(file_path: str) -> RunSummary:
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            return RunSummary.model_validate_json(f.read())
    except OSError as exc:
        raise ScenarioIOError(f"Cannot read summary {file_path}: {exc}") from exc
    except ValidationError as exc:
        raise ScenarioIOError(f"Malformed summary {file_path}: {exc}") from exc


def write_regret_curve_csv(curve: pd.DataFrame, file_path: str, float_format: Optional[str] = None) -> str:
    """Write the mean cumulative regret curve (one row per checkpoint)."""
    return write_trace_csv(curve, file_path, float_format)
