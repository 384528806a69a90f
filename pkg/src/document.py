"""Character-level document replay with per-character provenance.

Every character remembers who typed it, which accepted suggestion it came from and
the event that inserted it, so later stages can tell surviving AI text apart from
text the writer rewrote.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from itertools import count
from typing import Iterable, Optional

from src.errors import ReplayGap
from src.models import Event, EventName, EventSource

logger = logging.getLogger(__name__)

NO_SUGGESTION = -1


@dataclass(frozen=True)
class Char:
    ch: str
    cid: int
    owner: EventSource
    suggestion: int = NO_SUGGESTION
    origin_event: int = -1


@dataclass
class EditResult:
    """What one event did to the document."""

    pre_text: str
    inserted: list[tuple[int, int]] = field(default_factory=list)  # post-edit spans
    deleted: list[Char] = field(default_factory=list)
    edit_positions: list[int] = field(default_factory=list)  # pre-edit offsets
    resynced: bool = False

    @property
    def changed(self) -> bool:
        return bool(self.inserted or self.deleted or self.resynced)

    @property
    def inserted_chars(self) -> int:
        return sum(end - start for start, end in self.inserted)


_OP_KEYS = ("retain", "insert", "delete")


def _is_op(op) -> bool:
    return isinstance(op, dict) and any(key in op for key in _OP_KEYS)


def parse_delta(text_delta: Optional[str]) -> Optional[list[dict]]:
    """Quill ops from a textDelta payload, or None for a plain-text payload."""
    if not text_delta:
        return []
    stripped = text_delta.lstrip()
    if not stripped.startswith(("{", "[")):
        return None
    try:
        value = json.loads(text_delta)
    except json.JSONDecodeError:
        return None
    if isinstance(value, dict):
        if "ops" not in value:
            return None
        value = value["ops"]
    elif not value:
        return None
    if isinstance(value, list) and all(_is_op(op) for op in value):
        return value
    return None


class DocumentReplay:
    """Replays text events onto a provenance-tagged character buffer."""

    def __init__(self, text: str = ""):
        self._ids = count()
        self.chars: list[Char] = []
        self.cursor = 0
        if text:
            self._reset(text)

    @property
    def text(self) -> str:
        return "".join(c.ch for c in self.chars)

    def __len__(self) -> int:
        return len(self.chars)

    def _reset(self, text: str) -> None:
        self.chars = [Char(ch, next(self._ids), EventSource.USER) for ch in text]
        self.cursor = min(self.cursor, len(self.chars))

    def _insert(self, pos: int, s: str, owner: EventSource, suggestion: int, origin: int) -> None:
        new = [Char(ch, next(self._ids), owner, suggestion, origin) for ch in s]
        self.chars[pos:pos] = new

    def apply(self, event: Event, suggestion: int = NO_SUGGESTION) -> EditResult:
        """Apply one event; snapshots resync the buffer when replay disagrees."""
        result = EditResult(pre_text=self.text)
        try:
            if event.is_text_edit:
                self._apply_edit(event, suggestion, result)
        except ReplayGap:
            if event.current_doc is None:
                raise
            result.inserted.clear()
            result.deleted.clear()
        if event.current_doc is not None and event.current_doc != self.text:
            if event.event_name is not EventName.SYSTEM_INITIALIZE and self.chars:
                logger.debug(
                    "Resyncing session %s at event %d to snapshot",
                    event.session_id,
                    event.event_index,
                )
            self._reset(event.current_doc)
            result.resynced = True
        if not event.is_text_edit and event.cursor_range is not None:
            self.cursor = max(0, min(event.cursor_range[0], len(self.chars)))
        return result

    def _apply_edit(self, event: Event, suggestion: int, result: EditResult) -> None:
        ops = parse_delta(event.text_delta)
        owner = event.event_source
        n = len(self.chars)
        if ops is None:
            ops = self._plain_ops(event, n)

        pos = 0  # position in the evolving buffer
        pre = 0  # matching position in the pre-edit document
        for op in ops:
            if not isinstance(op, dict):
                continue
            if "retain" in op:
                step = int(op["retain"])
                if pos + step > len(self.chars):
                    raise ReplayGap(event.event_index, f"retain {step} past end")
                pos += step
                pre += step
            elif "insert" in op:
                s = op["insert"]
                if not isinstance(s, str) or not s:
                    continue
                self._insert(pos, s, owner, suggestion, event.event_index)
                result.edit_positions.append(pre)
                result.inserted.append((pos, pos + len(s)))
                pos += len(s)
                self.cursor = pos
            elif "delete" in op:
                step = int(op["delete"])
                if pos + step > len(self.chars):
                    raise ReplayGap(event.event_index, f"delete {step} past end")
                result.deleted.extend(self.chars[pos : pos + step])
                del self.chars[pos : pos + step]
                result.edit_positions.append(pre)
                pre += step
                self.cursor = pos

    def _plain_ops(self, event: Event, n: int) -> list[dict]:
        s = event.text_delta or ""
        if event.event_name is EventName.TEXT_INSERT:
            at = event.cursor_range[0] if event.cursor_range is not None else n
            if at > n:
                raise ReplayGap(event.event_index, f"insert at {at} past end {n}")
            return [{"retain": at}, {"insert": s}]
        at = event.cursor_range[0] if event.cursor_range is not None else max(n - len(s), 0)
        return [{"retain": at}, {"delete": len(s)}]


def replay_final_text(events: Iterable[Event]) -> str:
    """Best-effort document text after all events; gaps are skipped with a warning."""
    doc = DocumentReplay()
    for ev in events:
        try:
            doc.apply(ev)
        except ReplayGap as e:
            logger.warning("%s (session %s)", e, ev.session_id)
    return doc.text
