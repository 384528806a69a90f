"""LangGraph state for the analysis pipeline."""

from __future__ import annotations

from typing import Annotated, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.config import RunConfig
from src.models import (
    AdjacencyVector,
    ClusterModel,
    ClusterProfile,
    CodedLine,
    CodingReport,
    ElbowCurve,
    EnaSpace,
    FeatureSeries,
    FeatureVector,
    PairwiseTest,
    Session,
    StandardizationParams,
    SubtractedNetwork,
    SurveyResponse,
)


def merge_lists(existing: list, new: list) -> list:
    """Reducer that merges lists by extending."""
    return existing + new


class PipelineState(BaseModel):
    """State passed between pipeline stages."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig

    # Ingest
    sessions: list[Session] = Field(default_factory=list)
    survey: Optional[list[SurveyResponse]] = None

    # Features
    raw_series: list[FeatureSeries] = Field(default_factory=list)
    series: list[FeatureSeries] = Field(default_factory=list)
    aggregates: dict[str, FeatureVector] = Field(default_factory=dict)
    scaling: Optional[StandardizationParams] = None

    # Clustering
    elbow: Optional[ElbowCurve] = None
    model: Optional[ClusterModel] = None
    profile: Optional[ClusterProfile] = None
    reference_match: dict[int, int] = Field(default_factory=dict)

    # Coding and networks
    coded_lines: list[CodedLine] = Field(default_factory=list)
    coding_reports: list[CodingReport] = Field(default_factory=list)
    networks: dict[str, AdjacencyVector] = Field(default_factory=dict)
    space: Optional[EnaSpace] = None
    subtracted: list[SubtractedNetwork] = Field(default_factory=list)

    # Statistics
    feature_tests: list[PairwiseTest] = Field(default_factory=list)
    survey_tests: list[PairwiseTest] = Field(default_factory=list)

    # Bookkeeping
    artifacts: Annotated[list[str], merge_lists] = Field(default_factory=list)
    notices: Annotated[list[str], merge_lists] = Field(default_factory=list)
    error: Optional[str] = None
    exit_code: int = 0
