from __future__ import annotations

import json
import random

import pytest
from pydantic import ValidationError

from src.errors import EmptySession, MalformedRecord, NoSessionsFound, ScoreOutOfRange, UnknownEventName
from src.ingest import (
    load_session_index,
    load_sessions,
    load_survey,
    parse_session_log,
    write_session_csv,
)
from src.models import Event, EventName, EventSource, Genre, SurveyResponse
from src.synthetic import scripted_builder, write_corpus


def _jsonl(*records: dict) -> str:
    return "".join(json.dumps(r) + "\n" for r in records)


def test_three_inserts_get_contiguous_indices() -> None:
    raw = _jsonl(
        {"eventName": "text-insert", "eventSource": "user", "eventTimestamp": 1000, "textDelta": {"ops": [{"insert": "a"}]}},
        {"eventName": "text-insert", "eventSource": "user", "eventTimestamp": 1500, "textDelta": {"ops": [{"retain": 1}, {"insert": "b"}]}},
        {"eventName": "text-insert", "eventSource": "user", "eventTimestamp": 2500, "textDelta": {"ops": [{"retain": 2}, {"insert": "c"}]}},
    )
    session = parse_session_log(raw, session_id="s1")
    assert [e.event_index for e in session.events] == [0, 1, 2]
    assert [e.timestamp_ms for e in session.events] == [0, 500, 1500]
    assert session.final_doc == "abc"


def test_missing_event_name_is_malformed() -> None:
    raw = _jsonl(
        {"eventName": "text-insert", "eventSource": "user", "eventTimestamp": 0},
        {"eventSource": "user", "eventTimestamp": 5},
    )
    with pytest.raises(MalformedRecord) as info:
        parse_session_log(raw)
    assert info.value.line_no == 2


def test_bad_json_line_is_malformed() -> None:
    with pytest.raises(MalformedRecord):
        parse_session_log('{"eventName": "text-insert",\n')


def test_unknown_event_name() -> None:
    raw = _jsonl({"eventName": "window-blur", "eventSource": "user", "eventTimestamp": 0})
    with pytest.raises(UnknownEventName):
        parse_session_log(raw)


def test_empty_log_is_empty_session() -> None:
    with pytest.raises(EmptySession):
        parse_session_log("\n\n")


def test_raw_aliases_and_opaque_fields() -> None:
    raw = _jsonl(
        {"eventName": "suggestion-select", "eventSource": "user", "eventTimestamp": 10, "level": 3},
        {"eventName": "suggestion-reopen", "eventSource": "user", "eventTimestamp": 20},
    )
    session = parse_session_log(raw)
    assert session.events[0].event_name is EventName.SUGGESTION_ACCEPT
    assert session.events[0].attributes == {"level": 3}
    assert session.events[1].event_name is EventName.SUGGESTION_OPEN


def test_events_sorted_by_time_with_stable_ties() -> None:
    raw = _jsonl(
        {"eventName": "cursor-forward", "eventSource": "user", "eventTimestamp": 30},
        {"eventName": "suggestion-get", "eventSource": "user", "eventTimestamp": 10},
        {"eventName": "suggestion-hover", "eventSource": "user", "eventTimestamp": 10},
    )
    names = [e.event_name for e in parse_session_log(raw).events]
    assert names == [EventName.SUGGESTION_GET, EventName.SUGGESTION_HOVER, EventName.CURSOR_FORWARD]


def test_shuffled_lines_parse_to_the_same_session() -> None:
    lines = scripted_builder().jsonl().splitlines(keepends=True)
    stamps = [json.loads(line)["eventTimestamp"] for line in lines]
    assert len(set(stamps)) == len(stamps)
    shuffled = list(lines)
    random.Random(7).shuffle(shuffled)
    a = parse_session_log("".join(lines), session_id="x")
    b = parse_session_log("".join(shuffled), session_id="x")
    assert a.events == b.events


def test_csv_round_trip_is_exact() -> None:
    session = scripted_builder("rt").session(genre=Genre.CREATIVE)
    again = parse_session_log(write_session_csv(session), fmt="normalized-csv", genre=Genre.CREATIVE)
    assert again.session_id == "rt"
    assert again.events == session.events
    assert again.final_doc == session.final_doc


def test_csv_accepts_crlf() -> None:
    csv_text = (
        "sessionId,eventIndex,eventName,eventSource,timestampMs,textDelta,cursorStart,cursorEnd\r\n"
        "c1,0,text-insert,user,0,hello,0,0\r\n"
        "c1,1,text-delete,user,400,lo,3,3\r\n"
    )
    session = parse_session_log(csv_text, fmt="normalized-csv")
    assert session.session_id == "c1"
    assert session.events[1].event_source is EventSource.USER
    assert session.final_doc == "hel"


def test_csv_bracketed_text_is_inserted_verbatim() -> None:
    csv_text = (
        "sessionId,eventIndex,eventName,eventSource,timestampMs,textDelta,cursorStart,cursorEnd\n"
        "c2,0,text-insert,user,0,See,0,0\n"
        "c2,1,text-insert,user,100,[1],3,3\n"
    )
    assert parse_session_log(csv_text, fmt="normalized-csv").final_doc == "See[1]"


def test_reversed_cursor_range_is_malformed() -> None:
    record = {"eventName": "cursor-forward", "eventSource": "user", "timestampMs": 0, "cursorRange": [5, 2]}
    with pytest.raises(MalformedRecord):
        parse_session_log(_jsonl(record), fmt="coauthor-jsonl")
    with pytest.raises(ValidationError):
        Event(session_id="x", event_index=0, event_name=EventName.CURSOR_FORWARD,
              event_source=EventSource.USER, timestamp_ms=0, cursor_range=(5, 2))


def test_survey_scores() -> None:
    raw = "sessionId,Q1,Q2,Q3\na,7,7,7\nb,1,4,6\nc,2,2,2\n"
    responses = load_survey(raw)
    assert len(responses) == 3
    assert responses[0].answers == {"Q1": 7, "Q2": 7, "Q3": 7}


@pytest.mark.parametrize("cell", ["3.9", "7.4", "2.5"])
def test_fractional_survey_scores_are_malformed(cell) -> None:
    with pytest.raises(MalformedRecord):
        load_survey(f"sessionId,Q1\na,{cell}\n")


def test_whole_number_floats_are_accepted() -> None:
    assert load_survey("sessionId,Q1\na,4.0\n")[0].answers == {"Q1": 4}


def test_survey_response_rejects_out_of_range_scores() -> None:
    with pytest.raises(ValidationError):
        SurveyResponse(session_id="a", answers={"Q1": 8})


def test_synthetic_survey_asks_nine_questions(tmp_path) -> None:
    corpus = write_corpus(tmp_path, n_per_family=1, seed=0)
    responses = load_survey(corpus.survey_path.read_text(encoding="utf-8"))
    assert len(responses) == 4
    for r in responses:
        assert set(r.answers) == {f"Q{q}" for q in range(1, 10)}
        assert all(1 <= v <= 7 for v in r.answers.values())


def test_survey_score_out_of_range() -> None:
    with pytest.raises(ScoreOutOfRange) as info:
        load_survey("sessionId,Q1\na,0\n")
    assert info.value.value == 0


def test_survey_lenient_mode_drops_bad_rows() -> None:
    responses = load_survey("sessionId,Q1\na,3\nb,9\n", strict=False)
    assert [r.session_id for r in responses] == ["a"]


def test_session_index() -> None:
    index = load_session_index("sessionId,genre\na,creative\nb,Argumentative\nc,poetry\n")
    assert index == {"a": Genre.CREATIVE, "b": Genre.ARGUMENTATIVE, "c": Genre.UNKNOWN}


def test_load_sessions_uses_file_stems_and_index(tmp_path) -> None:
    logs = tmp_path / "logs"
    logs.mkdir()
    for sid in ("b", "a", "c"):
        (logs / f"{sid}.jsonl").write_text(scripted_builder(sid).jsonl(), encoding="utf-8")
    index = tmp_path / "index.csv"
    index.write_text("sessionId,genre\na,creative\nb,argumentative\n", encoding="utf-8")
    sessions = load_sessions(logs, index)
    assert [s.session_id for s in sessions] == ["a", "b", "c"]
    assert [s.genre for s in sessions] == [Genre.CREATIVE, Genre.ARGUMENTATIVE, Genre.UNKNOWN]


def test_empty_data_dir(tmp_path) -> None:
    with pytest.raises(NoSessionsFound):
        load_sessions(tmp_path)
