"""report.md: every table of the run in one Markdown summary."""

from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path

import pandas as pd

from src.cluster import elbow_frame, profile_frame
from src.models import FEATURE_NAMES
from src.nodes import output_path
from src.state import PipelineState
from src.stats import grid_frame, normality_screen, survey_profile, survey_questions
from src.utils import write_text

logger = logging.getLogger(__name__)


def markdown_table(frame: pd.DataFrame) -> str:
    def cell(v) -> str:
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v).replace("|", "\\|")

    header = "| " + " | ".join(str(c) for c in frame.columns) + " |"
    rule = "| " + " | ".join("---" for _ in frame.columns) + " |"
    body = ["| " + " | ".join(cell(v) for v in row) + " |" for row in frame.itertuples(index=False)]
    return "\n".join([header, rule, *body])


def build_report(state: PipelineState) -> str:
    cfg = state.config
    out: list[str] = ["# Co-writing usage patterns", ""]
    for key, value in sorted(cfg.provenance().items()):
        out.append(f"- {key}: `{value}`")
    out.append("")

    genres = Counter(s.genre.value for s in state.sessions)
    lengths = [s.length for s in state.raw_series]
    out += ["## Sessions", "", f"{len(state.sessions)} sessions ingested."]
    out += [f"- {g}: {n}" for g, n in sorted(genres.items())]
    if lengths:
        out.append(
            f"- windows per session: {min(lengths)}-{max(lengths)} (mean {sum(lengths) / len(lengths):.2f}, "
            f"{cfg.window_seconds} s windows)"
        )
    out.append("")

    if state.aggregates:
        out += ["## Normality screen", "", markdown_table(normality_screen(state.aggregates)), ""]

    if state.elbow is not None:
        out += ["## Elbow scan", "", markdown_table(elbow_frame(state.elbow)), ""]
    if state.model is not None and state.profile is not None:
        out += [
            "## Cluster profiles",
            "",
            f"k = {state.model.k}, inertia {state.model.inertia:.4f}, restart {state.model.restart_index}.",
            "",
            markdown_table(profile_frame(state.profile)),
            "",
        ]
        if state.reference_match:
            pairs = ", ".join(f"{c} -> {r}" for c, r in sorted(state.reference_match.items()))
            out += [f"Closest published usage pattern per cluster: {pairs}.", ""]
    if state.feature_tests:
        out += ["## Pairwise feature comparisons (Mann-Whitney U)", "",
                markdown_table(grid_frame(state.feature_tests, FEATURE_NAMES)), ""]
    if state.survey is not None and state.model is not None:
        questions = survey_questions(state.survey)
        out += ["## Survey by cluster", "", markdown_table(survey_profile(state.model, state.survey)), ""]
        if state.survey_tests:
            out += ["## Pairwise survey comparisons (Mann-Whitney U)", "",
                    markdown_table(grid_frame(state.survey_tests, questions)), ""]

    if state.space is not None:
        space = state.space
        out += ["## Network space", "", f"Rotation: {space.rotation}; {len(space.unit_ids)} units.", ""]
        rows = [
            {"dimension": d + 1, "varianceExplained": v, "fit": f}
            for d, (v, f) in enumerate(zip(space.variance_explained, space.fit))
        ]
        out += [markdown_table(pd.DataFrame(rows)), ""]
    if state.coding_reports:
        dropped = sum(r.dropped_codeless for r in state.coding_reports)
        ties = sum(r.similarity_ties for r in state.coding_reports)
        out += [f"Coded {len(state.coded_lines)} lines; {dropped} codeless events dropped; "
                f"{ties} similarity ties at the modification threshold.", ""]

    figures = sorted(Path(a).name for a in state.artifacts if a.endswith(".svg"))
    if figures:
        out += ["## Figures", ""] + [f"- figures/{name}" for name in figures] + [""]
    if state.notices:
        out += ["## Notices", ""] + [f"- {n}" for n in state.notices] + [""]
    return "\n".join(out)


def report_node(state: PipelineState) -> dict:
    """LangGraph node: write report.md."""
    path = write_text(output_path(state, "report.md"), build_report(state))
    logger.info("Report written to %s", path)
    return {"artifacts": [str(path)]}
