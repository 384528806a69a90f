"""Windowed feature extraction and standardization."""

from __future__ import annotations

import logging

from src.errors import AnalysisError
from src.features import extract_corpus, features_frame, standardize
from src.nodes import failed, save_csv
from src.state import PipelineState
from src.stats import normality_screen

logger = logging.getLogger(__name__)


def features_node(state: PipelineState) -> dict:
    """LangGraph node: per-window features, session aggregates and scaled series."""
    cfg = state.config
    try:
        raw, aggregates = extract_corpus(
            state.sessions, cfg.window_seconds, cfg.drop_partial_window, jobs=cfg.jobs
        )
        series, params = standardize(raw, cfg.scaling)
    except AnalysisError as e:
        return failed("features", e)

    lengths = [s.length for s in raw]
    logger.info(
        "Extracted features for %d sessions: %d-%d windows (mean %.1f)",
        len(raw), min(lengths), max(lengths), sum(lengths) / len(lengths),
    )
    artifacts = [
        save_csv(state, features_frame(raw), "features", "windows.csv"),
        save_csv(state, features_frame(series), "features", "windows_standardized.csv"),
        save_csv(state, normality_screen(aggregates), "stats", "normality.csv"),
    ]
    return {
        "raw_series": raw,
        "series": series,
        "aggregates": aggregates,
        "scaling": params,
        "artifacts": artifacts,
    }
