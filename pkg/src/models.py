"""Pydantic models for co-writing logs, usage time-series, clusters and epistemic networks."""

from __future__ import annotations

from enum import Enum
from itertools import combinations
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class EventName(str, Enum):
    SYSTEM_INITIALIZE = "system-initialize"
    TEXT_INSERT = "text-insert"
    TEXT_DELETE = "text-delete"
    CURSOR_FORWARD = "cursor-forward"
    CURSOR_BACKWARD = "cursor-backward"
    CURSOR_SELECT = "cursor-select"
    SUGGESTION_GET = "suggestion-get"
    SUGGESTION_OPEN = "suggestion-open"
    SUGGESTION_UP = "suggestion-up"
    SUGGESTION_DOWN = "suggestion-down"
    SUGGESTION_HOVER = "suggestion-hover"
    SUGGESTION_ACCEPT = "suggestion-accept"
    SUGGESTION_CLOSE = "suggestion-close"


# Raw CoAuthor names that map onto the canonical set
EVENT_NAME_ALIASES: dict[str, EventName] = {
    "suggestion-select": EventName.SUGGESTION_ACCEPT,
    "suggestion-reopen": EventName.SUGGESTION_OPEN,
}


class EventSource(str, Enum):
    USER = "user"
    API = "api"


class Genre(str, Enum):
    CREATIVE = "creative"
    ARGUMENTATIVE = "argumentative"
    UNKNOWN = "unknown"


# --- Ingestion models ---


class Event(BaseModel):
    """One timestamped keystroke-level action."""

    model_config = ConfigDict(frozen=True)

    session_id: str
    event_index: int = Field(ge=0)
    event_name: EventName
    event_source: EventSource
    timestamp_ms: int = Field(ge=0)
    text_delta: Optional[str] = None
    cursor_range: Optional[tuple[int, int]] = None
    current_doc: Optional[str] = None
    attributes: dict[str, Any] = Field(default_factory=dict)

    @field_validator("cursor_range")
    @classmethod
    def _check_cursor(cls, value: Optional[tuple[int, int]]) -> Optional[tuple[int, int]]:
        if value is not None and not 0 <= value[0] <= value[1]:
            raise ValueError(f"cursor range {value} is not 0 <= start <= end")
        return value

    @property
    def is_text_edit(self) -> bool:
        return self.event_name in (EventName.TEXT_INSERT, EventName.TEXT_DELETE)


class Session(BaseModel):
    """An ordered, immutable event stream for one writing session."""

    model_config = ConfigDict(frozen=True)

    session_id: str
    events: list[Event]
    genre: Genre = Genre.UNKNOWN
    final_doc: str = ""

    @model_validator(mode="after")
    def _check_events(self) -> "Session":
        if not self.events:
            raise ValueError("session has no events")
        prev = -1
        for i, ev in enumerate(self.events):
            if ev.event_index != i:
                raise ValueError(f"event_index {ev.event_index} at position {i}")
            if ev.timestamp_ms < prev:
                raise ValueError(f"timestamp decreases at event {i}")
            prev = ev.timestamp_ms
        return self

    @property
    def duration_ms(self) -> int:
        return self.events[-1].timestamp_ms


SCORE_RANGE: tuple[int, int] = (1, 7)


class SurveyResponse(BaseModel):
    session_id: str
    answers: dict[str, int]

    @field_validator("answers")
    @classmethod
    def _check_scores(cls, value: dict[str, int]) -> dict[str, int]:
        for question, score in value.items():
            if not SCORE_RANGE[0] <= score <= SCORE_RANGE[1]:
                raise ValueError(f"{question} score {score} outside {SCORE_RANGE}")
        return value


# --- Feature models ---


FEATURE_NAMES: tuple[str, ...] = ("calls", "accept_rate", "modify_rate", "ai_char_rate")

FEATURE_LABELS: dict[str, str] = {
    "calls": "Number of suggestion calls",
    "accept_rate": "Rate of suggestions accepted",
    "modify_rate": "Rate of suggestions modified",
    "ai_char_rate": "Rate of AI-generated characters",
}


class FeatureVector(BaseModel):
    """Four AI-usage measures for one window (or one whole session)."""

    calls: float = 0.0
    accept_rate: float = 0.0
    modify_rate: float = 0.0
    ai_char_rate: float = 0.0

    def as_list(self) -> list[float]:
        return [self.calls, self.accept_rate, self.modify_rate, self.ai_char_rate]

    @classmethod
    def from_list(cls, values) -> "FeatureVector":
        return cls(**{name: float(v) for name, v in zip(FEATURE_NAMES, values)})


class FeatureSeries(BaseModel):
    session_id: str
    windows: list[FeatureVector]
    window_seconds: int = Field(default=60, gt=0)
    standardized: bool = False

    @field_validator("windows")
    @classmethod
    def _non_empty(cls, v: list[FeatureVector]) -> list[FeatureVector]:
        if not v:
            raise ValueError("a feature series needs at least one window")
        return v

    @property
    def length(self) -> int:
        return len(self.windows)

    def to_array(self) -> np.ndarray:
        return np.array([w.as_list() for w in self.windows], dtype=np.float64)

    def with_values(self, values: np.ndarray, standardized: bool = True) -> "FeatureSeries":
        return FeatureSeries(
            session_id=self.session_id,
            windows=[FeatureVector.from_list(row) for row in values],
            window_seconds=self.window_seconds,
            standardized=standardized,
        )


class StandardizationParams(BaseModel):
    scope: Literal["pooled", "per-series"] = "pooled"
    mean: list[float]
    std_dev: list[float]
    degenerate: list[bool]
    # sessionId -> (mean, std_dev), only for per-series scaling
    per_series: dict[str, tuple[list[float], list[float]]] = Field(default_factory=dict)


# --- DTW / clustering models ---


class WarpingPath(BaseModel):
    """Monotone alignment between two series, 0-based (i, j) pairs."""

    pairs: list[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.pairs)


class Barycenter(BaseModel):
    series: list[list[float]]
    inertia_history: list[float] = Field(default_factory=list)

    def to_array(self) -> np.ndarray:
        return np.array(self.series, dtype=np.float64)


class ClusterModel(BaseModel):
    k: int = Field(gt=0)
    assignments: dict[str, int]
    barycenters: list[Barycenter]
    inertia: float
    seed: int
    iterations: int
    restart_index: int = 0
    inertia_history: list[float] = Field(default_factory=list)

    def members(self, label: int) -> list[str]:
        return [sid for sid, c in self.assignments.items() if c == label]

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for c in self.assignments.values():
            counts[c] += 1
        return counts


class ElbowCurve(BaseModel):
    points: list[tuple[int, float]]
    selected_k: Optional[int] = None


class ClusterProfileRow(BaseModel):
    cluster: int
    n: int
    mean: dict[str, float]
    std_dev: dict[str, float]


class ClusterProfile(BaseModel):
    rows: list[ClusterProfileRow]
    # cluster -> length-32 trajectory (L x 4)
    trajectories: dict[int, list[list[float]]] = Field(default_factory=dict)


# --- Statistics models ---


class Stars(str, Enum):
    NS = "ns"
    ONE = "*"
    TWO = "**"
    THREE = "***"
    FOUR = "****"


class TestResult(BaseModel):
    __test__ = False  # not a pytest class

    statistic: float
    p_value: float = Field(ge=0.0, le=1.0)
    n_a: int
    n_b: int = 0
    stars: Stars = Stars.NS
    p_adjusted: Optional[float] = None


class PairwiseTest(BaseModel):
    cluster_a: int
    cluster_b: int
    metric: str
    result: TestResult


# --- Coding models ---


CODE_NAMES: tuple[str, ...] = (
    "compose",
    "relocate",
    "reflect",
    "seekSugg",
    "dismissSugg",
    "acceptSugg",
    "hoverSugg",
    "cursorFwd",
    "cursorBwd",
    "cursorSelect",
    "reviseUser",
    "reviseSugg",
    "lowModification",
    "highModification",
)

CODE_INDEX: dict[str, int] = {name: i for i, name in enumerate(CODE_NAMES)}

# Canonical edge order: alphabetical code pairs
EDGE_PAIRS: tuple[tuple[str, str], ...] = tuple(combinations(sorted(CODE_NAMES), 2))


class CodedLine(BaseModel):
    session_id: str
    sentence_index: int
    line_index: int
    event_index: int
    codes: tuple[int, ...]

    @field_validator("codes")
    @classmethod
    def _check_codes(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if len(v) != len(CODE_NAMES):
            raise ValueError(f"expected {len(CODE_NAMES)} codes, got {len(v)}")
        if any(c not in (0, 1) for c in v):
            raise ValueError("codes must be binary")
        if v[CODE_INDEX["lowModification"]] and v[CODE_INDEX["highModification"]]:
            raise ValueError("low and high modification are exclusive")
        return v

    @property
    def conversation_key(self) -> tuple[str, int]:
        return (self.session_id, self.sentence_index)

    @property
    def code_names(self) -> list[str]:
        return [name for name, c in zip(CODE_NAMES, self.codes) if c]


class Ownership(str, Enum):
    USER = "user"
    API = "api"


class SentenceState(BaseModel):
    sentence_id: int
    sentence_index: int
    text: str
    start: int
    end: int
    ownership: Ownership = Ownership.USER
    anchor: Optional[str] = None


class SentenceSnapshot(BaseModel):
    """Sentence segmentation after one event."""

    event_index: int
    sentences: list[SentenceState]
    relocated: list[int] = Field(default_factory=list)
    doc_length: int = 0


class CodingReport(BaseModel):
    session_id: str
    lines: int = 0
    dropped_codeless: int = 0
    similarity_ties: int = 0


# --- ENA models ---


class AdjacencyVector(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    unit_id: str
    weights: np.ndarray
    normalized: np.ndarray
    is_zero: bool = False


class EnaSpace(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    unit_ids: list[str]
    centered: np.ndarray
    projection: np.ndarray
    unit_points: np.ndarray
    variance_explained: list[float]
    node_positions: Optional[np.ndarray] = None
    fit: list[float] = Field(default_factory=list)
    rotation: str = "svd"


class SubtractedNetwork(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    cluster_a: int
    cluster_b: int
    edge_deltas: np.ndarray
    color_sign: list[int]


# --- Plotting ---


class PlotSpec(BaseModel):
    kind: Literal["elbow", "trajectories", "network", "subtracted-network"]
    title: str = ""
    width: int = 960
    height: int = 720
    font_size: int = 12
    palette: tuple[str, ...] = (
        "#0072B2",
        "#E69F00",
        "#009E73",
        "#CC79A7",
        "#56B4E9",
        "#D55E00",
        "#F0E442",
        "#000000",
    )
