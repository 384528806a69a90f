"""Windowed AI-usage features and corpus standardization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.document import NO_SUGGESTION, DocumentReplay
from src.errors import ReplayGap
from src.models import (
    Event,
    EventName,
    EventSource,
    FeatureSeries,
    FeatureVector,
    Session,
    StandardizationParams,
)
from src.utils import is_terminated, split_sentences

logger = logging.getLogger(__name__)

DEGENERATE_STD = 1e-12


def window_count(session: Session, window_seconds: int) -> int:
    return session.duration_ms // (window_seconds * 1000) + 1


def windowize(session: Session, window_seconds: int = 60) -> list[tuple[int, list[Event]]]:
    """Split events into half-open windows [i*w, (i+1)*w); empty windows are kept."""
    if window_seconds <= 0:
        raise ValueError("window_seconds must be positive")
    width = window_seconds * 1000
    windows: list[tuple[int, list[Event]]] = [(i, []) for i in range(window_count(session, window_seconds))]
    for ev in session.events:
        windows[ev.timestamp_ms // width][1].append(ev)
    return windows


def _ratio(num: float, den: float) -> float:
    if den <= 0:
        return 0.0
    return min(1.0, num / den)


def _touched_suggestions(pre_text: str, chars, positions: list[int]) -> set[int]:
    """Suggestion ids of api characters in the sentences an edit touches."""
    hit: set[int] = set()
    if not positions:
        return hit
    for start, end in split_sentences(pre_text):
        inside = any(
            start <= p < end or (p == end and not is_terminated(pre_text[start:end]))
            for p in positions
        )
        if inside:
            hit.update(
                c.suggestion
                for c in chars[start:end]
                if c.owner is EventSource.API and c.suggestion != NO_SUGGESTION
            )
    return hit


@dataclass
class UsageTrace:
    """Per-window raw counts behind the four features."""

    n_windows: int
    calls: np.ndarray
    accepts: np.ndarray
    modified: np.ndarray
    inserted: np.ndarray
    ai_surviving: np.ndarray
    modified_ids: set[int] = field(default_factory=set)


def trace_usage(session: Session, window_seconds: int = 60) -> UsageTrace:
    """Replay a session and count suggestion and authorship events per window."""
    width = window_seconds * 1000
    n = window_count(session, window_seconds)
    calls = np.zeros(n, dtype=np.int64)
    accepts = np.zeros(n, dtype=np.int64)
    inserted = np.zeros(n, dtype=np.int64)

    doc = DocumentReplay()
    accept_window: dict[int, int] = {}
    modified_ids: set[int] = set()
    event_window: dict[int, int] = {}
    current = NO_SUGGESTION

    for ev in session.events:
        w = ev.timestamp_ms // width
        event_window[ev.event_index] = w
        if ev.event_name is EventName.SUGGESTION_GET:
            calls[w] += 1
        elif ev.event_name is EventName.SUGGESTION_ACCEPT:
            accepts[w] += 1
            current = len(accept_window)
            accept_window[current] = w

        is_api = ev.event_source is EventSource.API
        user_edit = ev.is_text_edit and not is_api
        before = list(doc.chars) if user_edit else []
        try:
            result = doc.apply(ev, suggestion=current if is_api else NO_SUGGESTION)
        except ReplayGap as e:
            logger.warning("%s (session %s); event skipped", e, session.session_id)
            continue
        inserted[w] += result.inserted_chars
        if user_edit and not result.resynced:
            touched = _touched_suggestions(result.pre_text, before, result.edit_positions)
            touched.update(
                c.suggestion
                for c in result.deleted
                if c.owner is EventSource.API and c.suggestion != NO_SUGGESTION
            )
            modified_ids |= touched

    modified = np.zeros(n, dtype=np.int64)
    for sid in modified_ids:
        modified[accept_window[sid]] += 1

    ai_surviving = np.zeros(n, dtype=np.int64)
    for c in doc.chars:
        if c.owner is EventSource.API and c.origin_event >= 0:
            ai_surviving[event_window[c.origin_event]] += 1

    return UsageTrace(n, calls, accepts, modified, inserted, ai_surviving, modified_ids)


def extract_features(
    session: Session,
    window_seconds: int = 60,
    drop_partial_window: bool = False,
) -> FeatureSeries:
    """Four AI-usage features per window: calls, accept, modify and AI-character rates."""
    return _series_from_trace(
        session.session_id, trace_usage(session, window_seconds), window_seconds, drop_partial_window
    )


def session_aggregate(session: Session, window_seconds: int = 60) -> FeatureVector:
    """Whole-session totals of the four features (the per-cluster profile rows)."""
    return _aggregate_from_trace(trace_usage(session, window_seconds))


def _series_from_trace(
    session_id: str, trace: UsageTrace, window_seconds: int, drop_partial_window: bool
) -> FeatureSeries:
    n = trace.n_windows
    if drop_partial_window and n > 1:
        n -= 1
    windows = [
        FeatureVector(
            calls=float(trace.calls[i]),
            accept_rate=_ratio(trace.accepts[i], trace.calls[i]),
            modify_rate=_ratio(trace.modified[i], trace.accepts[i]),
            ai_char_rate=_ratio(trace.ai_surviving[i], trace.inserted[i]),
        )
        for i in range(n)
    ]
    return FeatureSeries(session_id=session_id, windows=windows, window_seconds=window_seconds)


def _aggregate_from_trace(trace: UsageTrace) -> FeatureVector:
    return FeatureVector(
        calls=float(trace.calls.sum()),
        accept_rate=_ratio(trace.accepts.sum(), trace.calls.sum()),
        modify_rate=_ratio(trace.modified.sum(), trace.accepts.sum()),
        ai_char_rate=_ratio(trace.ai_surviving.sum(), trace.inserted.sum()),
    )


def extract_corpus(
    sessions: list[Session],
    window_seconds: int = 60,
    drop_partial_window: bool = False,
    jobs: int = 1,
) -> tuple[list[FeatureSeries], dict[str, FeatureVector]]:
    """Feature series and session aggregates for every session, in input order."""
    results = Parallel(n_jobs=jobs)(
        delayed(_extract_one)(s, window_seconds, drop_partial_window) for s in sessions
    )
    series = [r[0] for r in results]
    aggregates = {s.session_id: r[1] for s, r in zip(sessions, results)}
    return series, aggregates


def _extract_one(session: Session, window_seconds: int, drop_partial_window: bool):
    trace = trace_usage(session, window_seconds)
    return (
        _series_from_trace(session.session_id, trace, window_seconds, drop_partial_window),
        _aggregate_from_trace(trace),
    )


def _scale(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    degenerate = std < DEGENERATE_STD
    return mean, np.where(degenerate, 1.0, std), degenerate


def standardize(
    corpus: list[FeatureSeries],
    scaling: Literal["pooled", "per-series"] = "pooled",
) -> tuple[list[FeatureSeries], StandardizationParams]:
    """Zero-mean, unit-variance features; constant features are centered and flagged."""
    if not corpus:
        raise ValueError("cannot standardize an empty corpus")
    arrays = [s.to_array() for s in corpus]
    pooled = np.vstack(arrays)
    mean, std, degenerate = _scale(pooled)

    if scaling == "pooled":
        out = [s.with_values((a - mean) / std) for s, a in zip(corpus, arrays)]
        params = StandardizationParams(
            scope="pooled",
            mean=mean.tolist(),
            std_dev=np.where(degenerate, 0.0, std).tolist(),
            degenerate=degenerate.tolist(),
        )
    else:
        out = []
        per_series: dict[str, tuple[list[float], list[float]]] = {}
        for s, a in zip(corpus, arrays):
            m, sd, deg = _scale(a)
            out.append(s.with_values((a - m) / sd))
            per_series[s.session_id] = (m.tolist(), np.where(deg, 0.0, sd).tolist())
        params = StandardizationParams(
            scope="per-series",
            mean=mean.tolist(),
            std_dev=np.where(degenerate, 0.0, std).tolist(),
            degenerate=degenerate.tolist(),
            per_series=per_series,
        )
    flagged = [i for i, d in enumerate(params.degenerate) if d]
    if flagged:
        logger.warning("Degenerate (constant) features left centered: %s", flagged)
    return out, params


def features_frame(corpus: list[FeatureSeries]) -> pd.DataFrame:
    rows = [
        {
            "sessionId": s.session_id,
            "windowIndex": i,
            "calls": w.calls,
            "acceptRate": w.accept_rate,
            "modifyRate": w.modify_rate,
            "aiCharRate": w.ai_char_rate,
        }
        for s in corpus
        for i, w in enumerate(s.windows)
    ]
    return pd.DataFrame(
        rows, columns=["sessionId", "windowIndex", "calls", "acceptRate", "modifyRate", "aiCharRate"]
    )
