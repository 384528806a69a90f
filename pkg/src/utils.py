"""Text segmentation, hashing and provenance-stamped CSV helpers."""

from __future__ import annotations

import hashlib
import io
import re
from pathlib import Path

import pandas as pd

# A sentence starts at a non-space character and runs to a terminator run that is
# followed by whitespace or the end of the document (or to the end of the document).
SENTENCE_PATTERN = re.compile(r"\S.*?(?:[.!?]+(?=\s|\Z)|\Z)", re.DOTALL)

TERMINATORS = frozenset(".!?")

TOKEN_PATTERN = re.compile(r"[^\W_]+", re.UNICODE)


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Half-open (start, end) spans of the sentences in ``text``."""
    return [(m.start(), m.end()) for m in SENTENCE_PATTERN.finditer(text)]


def is_terminated(sentence: str) -> bool:
    return bool(sentence) and sentence[-1] in TERMINATORS


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens with punctuation stripped."""
    return TOKEN_PATTERN.findall(text.lower())


def content_hash(*parts: str) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def stamp_lines(provenance: dict[str, str]) -> str:
    return "".join(f"# {k}={v}\n" for k, v in sorted(provenance.items()))


def frame_to_csv(frame: pd.DataFrame, provenance: dict[str, str] | None = None) -> str:
    """Deterministic CSV text with optional leading provenance comments."""
    body = frame.to_csv(index=False, float_format="%.10g", lineterminator="\n")
    return (stamp_lines(provenance) if provenance else "") + body


def write_csv(path: Path, frame: pd.DataFrame, provenance: dict[str, str] | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(frame_to_csv(frame, provenance), encoding="utf-8", newline="")
    return path


def read_stamped_csv(source: str | Path | bytes, **kwargs) -> pd.DataFrame:
    """Read a CSV written by :func:`write_csv`, skipping the provenance header."""
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = source
    lines = text.splitlines(keepends=True)
    skip = 0
    while skip < len(lines) and lines[skip].startswith("# "):
        skip += 1
    return pd.read_csv(io.StringIO("".join(lines[skip:])), **kwargs)


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path
