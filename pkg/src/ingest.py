"""Session log ingestion: CoAuthor JSONL, normalized CSV, survey and session-index CSVs."""

from __future__ import annotations

import io
import json
import logging
import re
from pathlib import Path
from typing import IO, Any, Literal, Optional, Union

import pandas as pd
from joblib import Parallel, delayed

from src.document import replay_final_text
from src.errors import (
    EmptySession,
    MalformedRecord,
    NoSessionsFound,
    ScoreOutOfRange,
    UnknownEventName,
)
from src.models import (
    EVENT_NAME_ALIASES,
    SCORE_RANGE,
    Event,
    EventName,
    EventSource,
    Genre,
    Session,
    SurveyResponse,
)
from src.utils import frame_to_csv

logger = logging.getLogger(__name__)

RawInput = Union[bytes, str, IO[bytes], IO[str]]
LogFormat = Literal["coauthor-jsonl", "normalized-csv"]

CSV_COLUMNS = (
    "sessionId",
    "eventIndex",
    "eventName",
    "eventSource",
    "timestampMs",
    "textDelta",
    "cursorStart",
    "cursorEnd",
)
# Optional trailing columns that make the CSV round trip exact
CSV_EXTRA_COLUMNS = ("currentDoc", "attributes")

# JSONL keys with typed meaning; everything else goes to Event.attributes
_KNOWN_JSONL_KEYS = frozenset(
    {
        "sessionId",
        "eventName",
        "eventSource",
        "eventTimestamp",
        "timestampMs",
        "textDelta",
        "cursorRange",
        "currentDoc",
        "eventIndex",
    }
)

_QUESTION_COLUMN = re.compile(r"^Q\d+$")

SCORE_MIN, SCORE_MAX = SCORE_RANGE


def _read_text(raw: RawInput) -> str:
    if hasattr(raw, "read"):
        raw = raw.read()
    if isinstance(raw, bytes):
        return raw.decode("utf-8-sig")
    return raw


def _event_name(value: Any) -> EventName:
    name = str(value)
    if name in EVENT_NAME_ALIASES:
        return EVENT_NAME_ALIASES[name]
    try:
        return EventName(name)
    except ValueError:
        raise UnknownEventName(name) from None


def _text_delta(value: Any) -> Optional[str]:
    """CoAuthor stores deltas as Quill objects; keep them as compact JSON text."""
    if value is None or value == "":
        return None
    if isinstance(value, (dict, list)):
        return json.dumps(value, separators=(",", ":"), ensure_ascii=False)
    return str(value)


def _ordered(start: int, end: int) -> tuple[int, int]:
    if not 0 <= start <= end:
        raise ValueError(f"cursor range ({start}, {end}) is not 0 <= start <= end")
    return (start, end)


def _cursor_range(value: Any) -> Optional[tuple[int, int]]:
    if value is None or value == "":
        return None
    if isinstance(value, dict):
        start = int(value.get("index", 0))
        return _ordered(start, start + int(value.get("length", 0)))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return _ordered(int(value[0]), int(value[1]))
    raise ValueError(f"unrecognized cursorRange {value!r}")


def _finalize(
    session_id: str,
    rows: list[dict[str, Any]],
    genre: Genre,
) -> Session:
    """Sort by timestamp (stable on file order), rebase time, number events."""
    if not rows:
        raise EmptySession(session_id)
    rows = sorted(rows, key=lambda r: r["timestamp_ms"])
    t0 = rows[0]["timestamp_ms"]
    events = [
        Event(
            session_id=session_id,
            event_index=i,
            event_name=r["event_name"],
            event_source=r["event_source"],
            timestamp_ms=r["timestamp_ms"] - t0,
            text_delta=r.get("text_delta"),
            cursor_range=r.get("cursor_range"),
            current_doc=r.get("current_doc"),
            attributes=r.get("attributes", {}),
        )
        for i, r in enumerate(rows)
    ]
    final_doc = next(
        (ev.current_doc for ev in reversed(events) if ev.current_doc is not None),
        None,
    )
    if final_doc is None:
        final_doc = replay_final_text(events)
    return Session(session_id=session_id, events=events, genre=genre, final_doc=final_doc)


def _parse_jsonl(text: str, session_id: Optional[str]) -> tuple[str, list[dict[str, Any]]]:
    rows: list[dict[str, Any]] = []
    sid = session_id
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedRecord(line_no, str(e)) from None
        if not isinstance(record, dict):
            raise MalformedRecord(line_no, "record is not an object")
        if "eventName" not in record:
            raise MalformedRecord(line_no, "missing eventName")
        name = _event_name(record["eventName"])
        try:
            source = EventSource(record.get("eventSource"))
            ts = record.get("timestampMs", record.get("eventTimestamp"))
            if ts is None or isinstance(ts, bool):
                raise ValueError("missing timestamp")
            ts = int(ts)
            if ts < 0:
                raise ValueError("negative timestamp")
            cursor = _cursor_range(record.get("cursorRange"))
        except (ValueError, TypeError) as e:
            raise MalformedRecord(line_no, str(e)) from None
        if sid is None and record.get("sessionId"):
            sid = str(record["sessionId"])
        doc = record.get("currentDoc")
        rows.append(
            {
                "event_name": name,
                "event_source": source,
                "timestamp_ms": ts,
                "text_delta": _text_delta(record.get("textDelta")),
                "cursor_range": cursor,
                "current_doc": doc if isinstance(doc, str) and doc != "" else None,
                "attributes": {k: v for k, v in record.items() if k not in _KNOWN_JSONL_KEYS},
            }
        )
    return sid or "session", rows


def _parse_csv(text: str, session_id: Optional[str]) -> tuple[str, list[dict[str, Any]]]:
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, comment=None)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MalformedRecord(1, str(e)) from None
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise MalformedRecord(1, f"missing columns {missing}")

    sid = session_id
    rows: list[dict[str, Any]] = []
    for pos, rec in enumerate(frame.to_dict(orient="records")):
        line_no = pos + 2  # header is line 1
        if not rec["eventName"]:
            raise MalformedRecord(line_no, "missing eventName")
        name = _event_name(rec["eventName"])
        if sid is None:
            sid = rec["sessionId"] or None
        elif rec["sessionId"] and rec["sessionId"] != sid:
            raise MalformedRecord(line_no, f"mixed sessionId {rec['sessionId']!r}")
        try:
            source = EventSource(rec["eventSource"])
            ts = int(rec["timestampMs"])
            if ts < 0:
                raise ValueError("negative timestamp")
            cursor = None
            if rec["cursorStart"] != "" or rec["cursorEnd"] != "":
                cursor = _ordered(int(rec["cursorStart"]), int(rec["cursorEnd"]))
            attributes = json.loads(rec["attributes"]) if rec.get("attributes") else {}
        except (ValueError, TypeError) as e:
            raise MalformedRecord(line_no, str(e)) from None
        doc = rec.get("currentDoc", "")
        rows.append(
            {
                "event_name": name,
                "event_source": source,
                "timestamp_ms": ts,
                "text_delta": rec["textDelta"] or None,
                "cursor_range": cursor,
                "current_doc": doc if doc != "" else None,
                "attributes": attributes,
            }
        )
    return sid or "session", rows


def parse_session_log(
    raw: RawInput,
    fmt: LogFormat = "coauthor-jsonl",
    session_id: Optional[str] = None,
    genre: Genre = Genre.UNKNOWN,
) -> Session:
    """Parse one session log into a validated, time-ordered Session.

    ``session_id`` overrides any id found in the records; CoAuthor files carry none,
    so callers pass the file stem.
    """
    text = _read_text(raw)
    if fmt == "coauthor-jsonl":
        sid, rows = _parse_jsonl(text, session_id)
    elif fmt == "normalized-csv":
        sid, rows = _parse_csv(text, session_id)
    else:
        raise ValueError(f"unknown log format {fmt!r}")
    return _finalize(sid, rows, genre)


def write_session_csv(session: Session) -> str:
    """Serialize a Session to normalized CSV (the inverse of the csv parser)."""
    records = []
    for ev in session.events:
        start, end = ev.cursor_range if ev.cursor_range is not None else ("", "")
        records.append(
            {
                "sessionId": ev.session_id,
                "eventIndex": ev.event_index,
                "eventName": ev.event_name.value,
                "eventSource": ev.event_source.value,
                "timestampMs": ev.timestamp_ms,
                "textDelta": ev.text_delta or "",
                "cursorStart": start,
                "cursorEnd": end,
                "currentDoc": ev.current_doc if ev.current_doc is not None else "",
                "attributes": (
                    json.dumps(ev.attributes, sort_keys=True, ensure_ascii=False)
                    if ev.attributes
                    else ""
                ),
            }
        )
    frame = pd.DataFrame.from_records(records, columns=[*CSV_COLUMNS, *CSV_EXTRA_COLUMNS])
    return frame_to_csv(frame)


def load_survey(raw: RawInput, strict: bool = True) -> list[SurveyResponse]:
    """One SurveyResponse per row; scores must lie in [1, 7].

    With ``strict=False`` offending rows are dropped and logged instead of raising.
    """
    text = _read_text(raw)
    frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    if "sessionId" not in frame.columns:
        raise MalformedRecord(1, "survey CSV needs a sessionId column")
    questions = [c for c in frame.columns if _QUESTION_COLUMN.match(c)]

    responses: list[SurveyResponse] = []
    rejected = 0
    for row, rec in enumerate(frame.to_dict(orient="records"), start=1):
        answers: dict[str, int] = {}
        try:
            for q in questions:
                cell = rec[q].strip()
                if cell == "":
                    continue
                try:
                    number = float(cell)
                except ValueError:
                    raise MalformedRecord(row + 1, f"non-numeric score {cell!r}") from None
                if not number.is_integer():
                    raise MalformedRecord(row + 1, f"score {cell!r} is not a whole number")
                value = int(number)
                if not SCORE_MIN <= value <= SCORE_MAX:
                    raise ScoreOutOfRange(row, value)
                answers[q] = value
        except ScoreOutOfRange:
            if strict:
                raise
            rejected += 1
            continue
        responses.append(SurveyResponse(session_id=rec["sessionId"], answers=answers))

    if rejected:
        logger.warning("Rejected %d survey rows with scores outside [1, 7]", rejected)
    return responses


def load_session_index(raw: RawInput) -> dict[str, Genre]:
    """sessionId -> genre map; unrecognized genre labels become ``unknown``."""
    frame = pd.read_csv(io.StringIO(_read_text(raw)), dtype=str, keep_default_na=False)
    if "sessionId" not in frame.columns or "genre" not in frame.columns:
        raise MalformedRecord(1, "session index needs sessionId and genre columns")
    index: dict[str, Genre] = {}
    for rec in frame.to_dict(orient="records"):
        try:
            index[rec["sessionId"]] = Genre(rec["genre"].strip().lower())
        except ValueError:
            index[rec["sessionId"]] = Genre.UNKNOWN
    return index


def _load_file(path: Path, genre_index: dict[str, Genre]) -> Session:
    fmt: LogFormat = "normalized-csv" if path.suffix.lower() == ".csv" else "coauthor-jsonl"
    sid = path.stem if fmt == "coauthor-jsonl" else None
    session = parse_session_log(path.read_bytes(), fmt=fmt, session_id=sid)
    genre = genre_index.get(session.session_id, Genre.UNKNOWN)
    if genre is not Genre.UNKNOWN:
        session = session.model_copy(update={"genre": genre})
    return session


def discover_logs(data_dir: Path) -> list[Path]:
    return sorted(
        p for p in data_dir.iterdir() if p.is_file() and p.suffix.lower() in (".jsonl", ".csv")
    )


def load_sessions(
    data_dir: Path,
    session_index: Optional[Path] = None,
    jobs: int = 1,
) -> list[Session]:
    """Parse every session log in ``data_dir``, sorted by session id."""
    paths = discover_logs(data_dir)
    if not paths:
        raise NoSessionsFound(f"no .jsonl or .csv session logs in {data_dir}")
    genre_index = load_session_index(session_index.read_bytes()) if session_index else {}
    sessions = Parallel(n_jobs=jobs)(delayed(_load_file)(p, genre_index) for p in paths)
    return sorted(sessions, key=lambda s: s.session_id)
