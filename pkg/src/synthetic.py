"""CoAuthor-style synthetic writing sessions with planted AI-usage shapes."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd

from src.ingest import parse_session_log
from src.models import FeatureVector, Genre, Session

logger = logging.getLogger(__name__)

WINDOW_MS = 60_000

FAMILIES: dict[str, Callable[[float], float]] = {
    "rising": lambda t: t,
    "falling": lambda t: 1.0 - t,
    "flat-high": lambda t: 0.9,
    "mid-peaked": lambda t: 1.0 - abs(2.0 * t - 1.0),
}

_USER_SENTENCES = (
    " I walked along the river at dawn.",
    " The town was quiet and grey.",
    " We should think about the cost first.",
    " My sister never liked the winter.",
    " There is a strong case for change.",
    " Nobody answered the door.",
)

_SUGGESTIONS = (
    " The wind carried the smell of rain.",
    " Many people agree with this view.",
    " She smiled and looked away.",
    " This matters more than it seems.",
    " The lights flickered twice.",
)


@dataclass
class LogBuilder:
    """Emits CoAuthor JSONL records while tracking the document they produce."""

    session_id: str = "synthetic"
    text: str = ""
    records: list[dict] = field(default_factory=list)

    def _emit(self, ts: int, name: str, source: str, **extra) -> None:
        record = {"eventName": name, "eventSource": source, "eventTimestamp": int(ts)}
        record.update(extra)
        self.records.append(record)

    def _cursor(self, index: int, length: int = 0) -> dict:
        return {"index": index, "length": length}

    def initialize(self, ts: int = 0) -> "LogBuilder":
        self._emit(ts, "system-initialize", "api", cursorRange=self._cursor(0))
        return self

    def type_text(self, ts: int, s: str, at: Optional[int] = None, source: str = "user") -> "LogBuilder":
        at = len(self.text) if at is None else at
        ops = [{"retain": at}, {"insert": s}] if at else [{"insert": s}]
        self._emit(ts, "text-insert", source, textDelta={"ops": ops}, cursorRange=self._cursor(at))
        self.text = self.text[:at] + s + self.text[at:]
        return self

    def delete_text(self, ts: int, at: int, length: int) -> "LogBuilder":
        ops = [{"retain": at}, {"delete": length}] if at else [{"delete": length}]
        self._emit(ts, "text-delete", "user", textDelta={"ops": ops}, cursorRange=self._cursor(at + length))
        self.text = self.text[:at] + self.text[at + length :]
        return self

    def move_cursor(self, ts: int, index: int, name: str = "cursor-backward", length: int = 0) -> "LogBuilder":
        self._emit(ts, name, "user", cursorRange=self._cursor(index, length))
        return self

    def request(self, ts: int) -> "LogBuilder":
        self._emit(ts, "suggestion-get", "user")
        self._emit(ts + 1, "suggestion-open", "api")
        return self

    def hover(self, ts: int) -> "LogBuilder":
        self._emit(ts, "suggestion-hover", "user")
        return self

    def accept(self, ts: int, suggestion: str) -> "LogBuilder":
        self._emit(ts, "suggestion-select", "user")
        self._emit(ts + 1, "suggestion-close", "api")
        return self.type_text(ts + 2, suggestion, source="api")

    def dismiss(self, ts: int) -> "LogBuilder":
        self._emit(ts, "suggestion-close", "user")
        return self

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def session(self, genre: Genre = Genre.UNKNOWN) -> Session:
        return parse_session_log(self.jsonl(), session_id=self.session_id, genre=genre)


def _play_window(
    builder: LogBuilder,
    window: int,
    calls: int,
    accepts: int,
    modified: int,
    user_text: str,
    suggestion: str,
) -> None:
    """One minute of writing: type, then request suggestions, accepting the first few.

    Every piece of text is its own sentence, so a deletion inside an accepted
    suggestion touches only that suggestion.
    """
    ts = window * WINDOW_MS + 1_000
    if user_text:
        builder.type_text(ts, user_text)
    ts += 1_000
    for call in range(calls):
        builder.request(ts)
        if call < accepts:
            builder.hover(ts + 100)
            start = len(builder.text)
            builder.accept(ts + 200, suggestion)
            if call < modified:
                # drop the last letter before the full stop
                builder.delete_text(ts + 300, start + len(suggestion) - 2, 1)
        else:
            builder.dismiss(ts + 200)
        ts += 1_000


# calls, accepts, modified per minute of the scripted eleven-minute session
SCRIPTED_PLAN: tuple[tuple[int, int, int], ...] = (
    (0, 0, 0),
    (2, 1, 0),
    (4, 2, 1),
    (3, 3, 0),
    (0, 0, 0),
    (5, 1, 1),
    (1, 0, 0),
    (2, 2, 2),
    (4, 4, 1),
    (0, 0, 0),
    (3, 1, 0),
)
SCRIPTED_USER_TEXT = " I typed this myself."
SCRIPTED_SUGGESTION = " Here is some help."


def scripted_builder(session_id: str = "scripted") -> LogBuilder:
    builder = LogBuilder(session_id=session_id).initialize(0)
    for w, (calls, accepts, modified) in enumerate(SCRIPTED_PLAN):
        _play_window(builder, w, calls, accepts, modified, SCRIPTED_USER_TEXT, SCRIPTED_SUGGESTION)
    return builder


def scripted_session() -> Session:
    """Eleven windows of scripted activity with hand-countable features."""
    return scripted_builder().session()


def scripted_expected() -> list[FeatureVector]:
    """Per-window features of :func:`scripted_session`, counted from the plan."""
    expected = []
    u, s = len(SCRIPTED_USER_TEXT), len(SCRIPTED_SUGGESTION)
    for calls, accepts, modified in SCRIPTED_PLAN:
        inserted = u + accepts * s
        surviving = accepts * s - modified
        expected.append(
            FeatureVector(
                calls=float(calls),
                accept_rate=accepts / calls if calls else 0.0,
                modify_rate=modified / accepts if accepts else 0.0,
                ai_char_rate=surviving / inserted if inserted else 0.0,
            )
        )
    return expected


def family_session(family: str, session_id: str, rng: np.random.Generator) -> LogBuilder:
    """One session whose calls, accept and modify counts follow a family's shape."""
    shape = FAMILIES[family]
    n_windows = int(rng.integers(9, 14))
    builder = LogBuilder(session_id=session_id).initialize(0)
    for w in range(n_windows):
        level = shape(w / (n_windows - 1))
        calls = int(round(1 + 6 * level + rng.normal(0, 0.3)))
        calls = max(calls, 0)
        accepts = min(calls, int(round(calls * (0.2 + 0.7 * level))))
        modified = min(accepts, int(round(accepts * (0.6 - 0.5 * level))))
        user = "".join(rng.choice(_USER_SENTENCES, size=int(rng.integers(1, 3))))
        suggestion = str(rng.choice(_SUGGESTIONS))
        _play_window(builder, w, calls, accepts, modified, user, suggestion)
    return builder


def _survey_row(family: str, rng: np.random.Generator, n_questions: int) -> dict[str, int]:
    base = {"rising": 4.0, "falling": 3.5, "flat-high": 6.0, "mid-peaked": 5.0}[family]
    return {
        f"Q{q}": int(np.clip(round(base + rng.normal(0, 0.8)), 1, 7))
        for q in range(1, n_questions + 1)
    }


@dataclass
class SyntheticCorpus:
    log_dir: Path
    survey_path: Path
    index_path: Path
    families: dict[str, str]


def write_corpus(
    out_dir: Path,
    n_per_family: int = 50,
    seed: int = 0,
    families: tuple[str, ...] = tuple(FAMILIES),
    n_questions: int = 9,
) -> SyntheticCorpus:
    """Write JSONL logs, a survey CSV and a session index CSV.

    Logs go to ``out_dir/logs`` so the CSV side files stay out of the log directory.
    """
    rng = np.random.default_rng(seed)
    log_dir = out_dir / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    truth: dict[str, str] = {}
    survey_rows = []
    index_rows = []
    for f_idx, family in enumerate(families):
        for i in range(n_per_family):
            sid = f"s{f_idx}{i:03d}"
            builder = family_session(family, sid, rng)
            (log_dir / f"{sid}.jsonl").write_text(builder.jsonl(), encoding="utf-8")
            truth[sid] = family
            survey_rows.append({"sessionId": sid, **_survey_row(family, rng, n_questions)})
            genre = Genre.CREATIVE if i % 2 == 0 else Genre.ARGUMENTATIVE
            index_rows.append({"sessionId": sid, "genre": genre.value})

    survey_path = out_dir / "survey.csv"
    index_path = out_dir / "session_index.csv"
    pd.DataFrame(survey_rows).to_csv(survey_path, index=False, lineterminator="\n")
    pd.DataFrame(index_rows).to_csv(index_path, index=False, lineterminator="\n")
    logger.info("Wrote %d synthetic sessions to %s", len(truth), log_dir)
    return SyntheticCorpus(log_dir, survey_path, index_path, truth)
