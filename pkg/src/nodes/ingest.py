"""Session, survey and session-index ingestion."""

from __future__ import annotations

import logging
from collections import Counter

import pandas as pd

from src.errors import AnalysisError
from src.ingest import load_sessions, load_survey, write_session_csv
from src.nodes import failed, output_path, save_csv
from src.state import PipelineState
from src.utils import stamp_lines, write_text

logger = logging.getLogger(__name__)


def ingest_node(state: PipelineState) -> dict:
    """LangGraph node: parse every log, normalize it to CSV and report counts."""
    cfg = state.config
    try:
        sessions = load_sessions(cfg.data_dir, cfg.session_index, jobs=cfg.jobs)
        survey = load_survey(cfg.survey_path.read_bytes(), strict=False) if cfg.survey_path else None
    except AnalysisError as e:
        return failed("ingest", e)

    artifacts = []
    for s in sessions:
        body = stamp_lines(cfg.provenance()) + write_session_csv(s)
        artifacts.append(str(write_text(output_path(state, "sessions", f"{s.session_id}.csv"), body)))

    genres = Counter(s.genre.value for s in sessions)
    report = pd.DataFrame(
        [
            {"sessionId": s.session_id, "genre": s.genre.value, "events": len(s.events),
             "durationMs": s.duration_ms, "finalChars": len(s.final_doc)}
            for s in sessions
        ],
        columns=["sessionId", "genre", "events", "durationMs", "finalChars"],
    )
    artifacts.append(save_csv(state, report, "sessions", "ingest_report.csv"))
    logger.info(
        "Ingested %d sessions (%s)",
        len(sessions), ", ".join(f"{g}: {n}" for g, n in sorted(genres.items())),
    )
    notices = [] if survey is not None else ["No survey file configured; survey statistics skipped."]
    return {"sessions": sessions, "survey": survey, "artifacts": artifacts, "notices": notices}
