"""Pairwise cluster comparisons on usage features and survey answers."""

from __future__ import annotations

import logging

from src.errors import AnalysisError
from src.models import FEATURE_NAMES
from src.nodes import failed, save_csv
from src.state import PipelineState
from src.stats import (
    feature_values,
    grid_frame,
    pairwise_cluster_tests,
    pairwise_tests_frame,
    survey_profile,
    survey_questions,
    survey_values,
)

logger = logging.getLogger(__name__)


def stats_node(state: PipelineState) -> dict:
    """LangGraph node: Mann-Whitney grids for features and, when present, the survey."""
    cfg = state.config
    model = state.model
    artifacts = []
    try:
        feature_tests = [
            t
            for f in FEATURE_NAMES
            for t in pairwise_cluster_tests(model, feature_values(state.aggregates, f), f, cfg.holm)
        ]
        artifacts.append(save_csv(state, grid_frame(feature_tests, FEATURE_NAMES), "stats", "features_grid.csv"))
        artifacts.append(save_csv(state, pairwise_tests_frame(feature_tests), "stats", "features_tests.csv"))

        survey_tests = []
        if state.survey is None:
            logger.info("No survey file; survey statistics skipped")
        else:
            questions = survey_questions(state.survey)
            survey_tests = [
                t
                for q in questions
                for t in pairwise_cluster_tests(model, survey_values(state.survey, q), q, cfg.holm)
            ]
            artifacts.append(save_csv(state, survey_profile(model, state.survey), "stats", "survey_profile.csv"))
            artifacts.append(save_csv(state, grid_frame(survey_tests, questions), "stats", "survey_grid.csv"))
            artifacts.append(save_csv(state, pairwise_tests_frame(survey_tests), "stats", "survey_tests.csv"))
    except AnalysisError as e:
        return failed("stats", e)

    significant = sum(1 for t in feature_tests + survey_tests if t.result.p_value <= 0.05)
    logger.info("Ran %d pairwise tests (%d at p <= 0.05)", len(feature_tests) + len(survey_tests), significant)
    return {"feature_tests": feature_tests, "survey_tests": survey_tests, "artifacts": artifacts}
