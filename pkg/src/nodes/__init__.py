"""Pipeline stage nodes and the artifact helpers they share."""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd

from src.errors import AnalysisError
from src.state import PipelineState
from src.utils import write_csv, write_text

logger = logging.getLogger(__name__)


def failed(stage: str, error: AnalysisError) -> dict:
    logger.error("%s failed: %s", stage, error)
    return {"error": f"{stage}: {error}", "exit_code": error.exit_code}


def output_path(state: PipelineState, *parts: str) -> Path:
    return state.config.output_dir.joinpath(*parts)


def save_csv(state: PipelineState, frame: pd.DataFrame, *parts: str) -> str:
    path = write_csv(output_path(state, *parts), frame, state.config.provenance())
    logger.debug("Wrote %s", path)
    return str(path)


def save_svg(state: PipelineState, svg: str, name: str) -> str:
    path = write_text(output_path(state, "figures", name), svg)
    logger.debug("Wrote %s", path)
    return str(path)
