"""Snippet record model and line-delimited (JSONL) file IO.

Two record shapes share one file format: corpus rows carry the five task
fields, dataset rows additionally carry ``target`` (human/ai) and ``set``
(the sub-dataset label ``<Dst>_from_<Src>``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

HUMAN = "human"
AI = "ai"
TARGETS = (HUMAN, AI)

CORPUS_FIELDS = ("task_name", "task_url", "task_description", "language_name", "code")
DATASET_FIELDS = CORPUS_FIELDS + ("target", "set")


class RecordFormatError(ValueError):
    """A line in a record file does not match the expected schema."""


@dataclass(frozen=True)
class RawSnippet:
    """One human-written task solution from the source corpus."""

    task_name: str
    task_url: str
    task_description: str
    language_name: str
    code: str

    def to_dict(self) -> dict[str, str]:
        return {f: getattr(self, f) for f in CORPUS_FIELDS}


@dataclass(frozen=True)
class SnippetRecord:
    """One labeled dataset row: a snippet plus provenance label and sub-dataset id."""

    task_name: str
    task_url: str
    task_description: str
    language_name: str
    code: str
    target: str
    set: str

    def to_dict(self) -> dict[str, str]:
        return {f: getattr(self, f) for f in DATASET_FIELDS}


def _parse_line(line: str, lineno: int, fields: tuple[str, ...], path: Path) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise RecordFormatError(f"{path}:{lineno}: expected an object, got {type(obj).__name__}")
    missing = [f for f in fields if f not in obj]
    extra = [k for k in obj if k not in fields]
    if missing or extra:
        raise RecordFormatError(
            f"{path}:{lineno}: schema mismatch (missing={missing}, unexpected={extra})"
        )
    for f in fields:
        if not isinstance(obj[f], str):
            raise RecordFormatError(f"{path}:{lineno}: field {f!r} must be a string")
    return obj


def read_raw_snippets(path: str | Path) -> Iterator[RawSnippet]:
    """Yield corpus rows from a JSONL file, validating the schema per line."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = _parse_line(line, lineno, CORPUS_FIELDS, path)
            yield RawSnippet(**obj)


def read_snippet_records(path: str | Path) -> Iterator[SnippetRecord]:
    """Yield dataset rows from a JSONL file, validating the schema per line."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = _parse_line(line, lineno, DATASET_FIELDS, path)
            if obj["target"] not in TARGETS:
                raise RecordFormatError(
                    f"{path}:{lineno}: target must be one of {TARGETS}, got {obj['target']!r}"
                )
            yield SnippetRecord(**obj)


def write_records(path: str | Path, records: Iterable[RawSnippet | SnippetRecord]) -> int:
    """Write records as JSONL with a fixed key order. Returns the row count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False))
            fh.write("\n")
            n += 1
    return n
