from __future__ import annotations

import json

import numpy as np
import pytest

from src.models import Event, EventName, EventSource, FeatureSeries, FeatureVector, Session
from src.synthetic import LogBuilder


def make_event(
    index: int,
    name: str,
    ts: int = 0,
    source: str = "user",
    delta: str | None = None,
    cursor: tuple[int, int] | None = None,
    doc: str | None = None,
    session_id: str = "t",
) -> Event:
    return Event(
        session_id=session_id,
        event_index=index,
        event_name=EventName(name),
        event_source=EventSource(source),
        timestamp_ms=ts,
        text_delta=delta,
        cursor_range=cursor,
        current_doc=doc,
    )


def insert_delta(at: int, text: str) -> str:
    ops = [{"retain": at}, {"insert": text}] if at else [{"insert": text}]
    return json.dumps({"ops": ops})


def delete_delta(at: int, length: int) -> str:
    ops = [{"retain": at}, {"delete": length}] if at else [{"delete": length}]
    return json.dumps({"ops": ops})


def series_from(session_id: str, values) -> FeatureSeries:
    arr = np.asarray(values, dtype=np.float64).reshape(len(values), -1)
    if arr.shape[1] == 1:
        arr = np.hstack([arr, np.zeros((arr.shape[0], 3))])
    return FeatureSeries(session_id=session_id, windows=[FeatureVector.from_list(r) for r in arr])


@pytest.fixture
def builder() -> LogBuilder:
    return LogBuilder(session_id="b").initialize(0)


@pytest.fixture
def session_of():
    """Build a Session straight from (name, ts, source, delta, cursor) tuples."""

    def build(*rows, session_id: str = "t") -> Session:
        events = [
            make_event(i, *row, session_id=session_id) if isinstance(row, tuple) else row
            for i, row in enumerate(rows)
        ]
        return Session(session_id=session_id, events=events)

    return build


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
