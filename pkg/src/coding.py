"""Sentence tracking and the fourteen-code event coding scheme."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from typing import Optional

import pandas as pd
from joblib import Parallel, delayed

from src.document import DocumentReplay, EditResult
from src.errors import ReplayGap
from src.models import (
    CODE_INDEX,
    CODE_NAMES,
    CodedLine,
    CodingReport,
    EventName,
    EventSource,
    Ownership,
    SentenceSnapshot,
    SentenceState,
    Session,
)
from src.similarity import LexicalSimilarity, SimilarityProvider
from src.utils import is_terminated, split_sentences

logger = logging.getLogger(__name__)

MODIFICATION_THRESHOLD = 0.8
REFLECT_FRACTION = 0.9

# Events whose code follows from the name (and source) alone
_DIRECT_CODES: dict[EventName, str] = {
    EventName.SUGGESTION_GET: "seekSugg",
    EventName.SUGGESTION_ACCEPT: "acceptSugg",
    EventName.SUGGESTION_HOVER: "hoverSugg",
    EventName.CURSOR_FORWARD: "cursorFwd",
    EventName.CURSOR_BACKWARD: "cursorBwd",
    EventName.CURSOR_SELECT: "cursorSelect",
}


def sentence_index_at(position: int, sentences: list[SentenceState]) -> int:
    """Index of the sentence a document position belongs to.

    Whitespace before a sentence belongs to it; the end of an unterminated sentence
    still belongs to it; past a terminated last sentence is the next (new) index.
    """
    for i, s in enumerate(sentences):
        if position < s.end:
            return i
        if position == s.end and not is_terminated(s.text):
            return i
    return len(sentences)


def _touches(position: int, sentence: SentenceState) -> bool:
    return sentence.start <= position < sentence.end or (
        position == sentence.end and not is_terminated(sentence.text)
    )


def _out_of_order(old: list[int], new: list[int]) -> set[int]:
    """Ids present in both orders that fall outside their longest common subsequence."""
    common = set(old) & set(new)
    a = [i for i in old if i in common]
    b = [i for i in new if i in common]
    kept: set[int] = set()
    for block in SequenceMatcher(None, a, b, autojunk=False).get_matching_blocks():
        kept.update(a[block.a : block.a + block.size])
    return common - kept


@dataclass
class Step:
    """One replayed event as seen by the coder."""

    edit: EditResult
    before: list[SentenceState]
    after: list[SentenceState]
    relocated: list[int] = field(default_factory=list)
    # ids of sentences that lost characters
    lost: set[int] = field(default_factory=set)


class SentenceTracker:
    """Segments the replayed document after each event and keeps sentence identity.

    A new sentence inherits the id of the old sentence it shares the most
    characters with. A sentence with no shared characters whose text equals a
    removed sentence (in this event or an earlier one) takes that id back, so a
    cut followed by a paste keeps its identity and counts as a move.
    """

    def __init__(self) -> None:
        self.doc = DocumentReplay()
        self.sentences: list[SentenceState] = []
        self._cid_owner: dict[int, int] = {}
        self._ownership: dict[int, Ownership] = {}
        self._anchor: dict[int, str] = {}
        # text -> id, and the sentence order at the time of removal
        self._removed: dict[str, int] = {}
        self._removed_order: dict[int, list[int]] = {}
        self._next_id = 0

    def step(self, event) -> Step:
        before = self.sentences
        edit = self.doc.apply(event)
        if not edit.changed:
            return Step(edit, before, before)
        lost = {self._cid_owner[c.cid] for c in edit.deleted if c.cid in self._cid_owner}
        after, revived = self._segment(event.event_source is EventSource.API)
        before_ids = [s.sentence_id for s in before]
        after_ids = [s.sentence_id for s in after]

        moved = _out_of_order(before_ids, after_ids)
        for sid in revived:
            if sid in _out_of_order(self._removed_order.pop(sid, []), after_ids):
                moved.add(sid)

        present = set(after_ids)
        for s in before:
            if s.sentence_id not in present:
                self._removed[s.text] = s.sentence_id
                self._removed_order[s.sentence_id] = before_ids
        self.sentences = after
        return Step(edit, before, after, [i for i in after_ids if i in moved], lost)

    def _claim_by_text(self, body: str, claimed: set[int]) -> tuple[int | None, bool]:
        for s in self.sentences:
            if s.sentence_id not in claimed and s.text == body:
                return s.sentence_id, False
        sid = self._removed.get(body)
        if sid is not None and sid not in claimed:
            del self._removed[body]
            return sid, True
        return None, False

    def _segment(self, api_edit: bool) -> tuple[list[SentenceState], set[int]]:
        chars = self.doc.chars
        text = self.doc.text
        spans = split_sentences(text)

        overlaps: list[tuple[int, int, int]] = []
        for idx, (start, end) in enumerate(spans):
            counts: dict[int, int] = {}
            for c in chars[start:end]:
                sid = self._cid_owner.get(c.cid)
                if sid is not None:
                    counts[sid] = counts.get(sid, 0) + 1
            overlaps.extend((-n, idx, sid) for sid, n in counts.items())
        overlaps.sort()

        assigned: dict[int, int] = {}
        claimed: set[int] = set()
        for _, idx, sid in overlaps:
            if idx in assigned or sid in claimed:
                continue
            assigned[idx] = sid
            claimed.add(sid)

        revived: set[int] = set()
        for idx, (start, end) in enumerate(spans):
            if idx in assigned:
                continue
            sid, from_removed = self._claim_by_text(text[start:end], claimed)
            if sid is None:
                sid = self._next_id
                self._next_id += 1
            elif from_removed:
                revived.add(sid)
            assigned[idx] = sid
            claimed.add(sid)

        self._cid_owner = {}
        result: list[SentenceState] = []
        for idx, (start, end) in enumerate(spans):
            sid = assigned[idx]
            body = text[start:end]
            api_chars = sum(1 for c in chars[start:end] if c.owner is EventSource.API)
            api_majority = api_chars * 2 > (end - start)
            if sid not in self._ownership:
                self._ownership[sid] = Ownership.API if api_majority else Ownership.USER
                if api_majority:
                    self._anchor[sid] = body
            elif api_edit and api_majority and self._ownership[sid] is Ownership.USER:
                self._ownership[sid] = Ownership.API
                self._anchor[sid] = body
            for c in chars[start:end]:
                self._cid_owner[c.cid] = sid
            result.append(
                SentenceState(
                    sentence_id=sid,
                    sentence_index=idx,
                    text=body,
                    start=start,
                    end=end,
                    ownership=self._ownership[sid],
                    anchor=self._anchor.get(sid),
                )
            )
        return result, revived


def track_sentences(session: Session) -> list[SentenceSnapshot]:
    """Sentence segmentation, ownership and relocations after every event."""
    tracker = SentenceTracker()
    history: list[SentenceSnapshot] = []
    for ev in session.events:
        step = tracker.step(ev)
        history.append(
            SentenceSnapshot(
                event_index=ev.event_index,
                sentences=step.after,
                relocated=step.relocated,
                doc_length=len(tracker.doc),
            )
        )
    return history


def _modification_code(
    step: Step,
    touched_api: list[SentenceState],
    similarity: SimilarityProvider,
) -> tuple[Optional[str], bool]:
    """low/high modification from the least similar touched suggestion sentence."""
    after = {s.sentence_id: s for s in step.after}
    scores = []
    for s in touched_api:
        anchor = s.anchor or s.text
        current = after.get(s.sentence_id)
        if current is None or not current.text.strip() or not anchor.strip():
            scores.append(0.0)
        else:
            scores.append(similarity.similarity(current.text, anchor))
    if not scores:
        return None, False
    score = min(scores)
    if score > MODIFICATION_THRESHOLD:
        return "lowModification", False
    if score < MODIFICATION_THRESHOLD:
        return "highModification", False
    return None, True


def code_events(
    session: Session,
    similarity: Optional[SimilarityProvider] = None,
    report: Optional[CodingReport] = None,
) -> list[CodedLine]:
    """One coded line per event that sets at least one code."""
    similarity = similarity or LexicalSimilarity()
    report = report if report is not None else CodingReport(session_id=session.session_id)
    final_length = len(session.final_doc)
    tracker = SentenceTracker()
    line_counter: dict[int, int] = {}
    lines: list[CodedLine] = []

    for ev in session.events:
        step = tracker.step(ev)
        codes = [0] * len(CODE_NAMES)
        name = ev.event_name

        if name in _DIRECT_CODES:
            codes[CODE_INDEX[_DIRECT_CODES[name]]] = 1
        elif name is EventName.SUGGESTION_CLOSE and ev.event_source is EventSource.USER:
            codes[CODE_INDEX["dismissSugg"]] = 1

        edit = step.edit
        if step.relocated:
            codes[CODE_INDEX["relocate"]] = 1

        positions = edit.edit_positions
        if ev.is_text_edit and positions and not edit.resynced:
            content_end = len(edit.pre_text.rstrip())
            if name is EventName.TEXT_INSERT and not edit.deleted and min(positions) >= content_end:
                codes[CODE_INDEX["compose"]] = 1
            elif ev.event_source is EventSource.USER:
                touched = [
                    s for s in step.before
                    if s.sentence_id in step.lost or any(_touches(p, s) for p in positions)
                ]
                touched_api = [s for s in touched if s.ownership is Ownership.API]
                if touched_api:
                    codes[CODE_INDEX["reviseSugg"]] = 1
                    mod, tie = _modification_code(step, touched_api, similarity)
                    if mod:
                        codes[CODE_INDEX[mod]] = 1
                    if tie:
                        report.similarity_ties += 1
                if len(touched_api) < len(touched) or not touched:
                    codes[CODE_INDEX["reviseUser"]] = 1

        revised = codes[CODE_INDEX["reviseUser"]] or codes[CODE_INDEX["reviseSugg"]] or codes[CODE_INDEX["relocate"]]
        if revised and final_length and len(tracker.doc) >= REFLECT_FRACTION * final_length:
            codes[CODE_INDEX["reflect"]] = 1

        if not any(codes):
            report.dropped_codeless += 1
            continue

        if ev.is_text_edit and edit.inserted:
            position = edit.inserted[0][0]
        else:
            position = tracker.doc.cursor
        sentence_index = sentence_index_at(position, step.after)
        line_index = line_counter.get(sentence_index, 0)
        line_counter[sentence_index] = line_index + 1
        lines.append(
            CodedLine(
                session_id=session.session_id,
                sentence_index=sentence_index,
                line_index=line_index,
                event_index=ev.event_index,
                codes=tuple(codes),
            )
        )

    report.lines = len(lines)
    if report.similarity_ties:
        logger.warning(
            "Session %s: %d revisions scored exactly %.1f similarity (no modification code)",
            session.session_id, report.similarity_ties, MODIFICATION_THRESHOLD,
        )
    return lines


def _code_one(session: Session, similarity: SimilarityProvider):
    report = CodingReport(session_id=session.session_id)
    try:
        return code_events(session, similarity, report), report
    except ReplayGap as e:
        logger.warning("Session %s not coded: %s", session.session_id, e)
        return [], report


def code_corpus(
    sessions: list[Session],
    similarity: SimilarityProvider,
    jobs: int = 1,
) -> tuple[list[CodedLine], list[CodingReport]]:
    """Code every session; threads share one provider (and its cache)."""
    results = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_code_one)(s, similarity) for s in sessions
    )
    lines = [line for session_lines, _ in results for line in session_lines]
    reports = [r for _, r in results]
    dropped = sum(r.dropped_codeless for r in reports)
    logger.info("Coded %d lines across %d sessions (%d codeless events dropped)", len(lines), len(sessions), dropped)
    return lines, reports


def coded_lines_frame(lines: list[CodedLine]) -> pd.DataFrame:
    rows = [
        {
            "sessionId": line.session_id,
            "sentenceIndex": line.sentence_index,
            "lineIndex": line.line_index,
            "eventIndex": line.event_index,
            **dict(zip(CODE_NAMES, line.codes)),
        }
        for line in lines
    ]
    return pd.DataFrame(rows, columns=["sessionId", "sentenceIndex", "lineIndex", "eventIndex", *CODE_NAMES])
