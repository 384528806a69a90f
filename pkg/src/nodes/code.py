"""Event coding stage."""

from __future__ import annotations

import logging

import pandas as pd

from src.coding import code_corpus, coded_lines_frame
from src.errors import AnalysisError
from src.nodes import failed, save_csv
from src.similarity import HttpSimilarity, build_provider
from src.state import PipelineState

logger = logging.getLogger(__name__)


def code_node(state: PipelineState) -> dict:
    """LangGraph node: code every session's events into conversation lines."""
    cfg = state.config
    provider = build_provider(
        cfg.similarity_provider, cfg.embed_url, cfg.similarity_cache, cfg.max_in_flight
    )
    try:
        lines, reports = code_corpus(state.sessions, provider, jobs=cfg.jobs)
    except AnalysisError as e:
        return failed("code", e)
    if isinstance(provider, HttpSimilarity):
        provider.cache.save()
        logger.info("Similarity cache holds %d pairs", len(provider.cache))

    summary = pd.DataFrame(
        [r.model_dump() for r in reports],
        columns=["session_id", "lines", "dropped_codeless", "similarity_ties"],
    ).rename(
        columns={
            "session_id": "sessionId",
            "dropped_codeless": "droppedCodeless",
            "similarity_ties": "similarityTies",
        }
    )
    artifacts = [
        save_csv(state, coded_lines_frame(lines), "ena", "coded_lines.csv"),
        save_csv(state, summary, "ena", "coding_report.csv"),
    ]
    return {"coded_lines": lines, "coding_reports": reports, "artifacts": artifacts}
