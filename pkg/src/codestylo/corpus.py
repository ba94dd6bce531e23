"""Corpus ingestion, language filtering, and task-balanced pair computation.

The corpus is a Rosetta-style collection of (task, language) solutions. A
destination/source language pair keeps exactly the tasks solved in BOTH
languages, which later guarantees one human and at most one AI snippet per
task in every sub-dataset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from .records import RawSnippet, read_raw_snippets

if TYPE_CHECKING:
    from .generation import Dataset

log = logging.getLogger(__name__)

_DATA_DIR = Path(__file__).parent / "data"
DEFAULT_RANKING_FILE = _DATA_DIR / "ranking.tsv"
DEFAULT_ALIAS_FILE = _DATA_DIR / "aliases.tsv"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Corpus:
    """Deduplicated snippet collection with its task/language index."""

    snippets: tuple[RawSnippet, ...]
    languages: frozenset[str] = field(default_factory=frozenset)
    tasks: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        # lookup index; first snippet wins, matching the dedup policy
        index: dict[tuple[str, str], RawSnippet] = {}
        for s in self.snippets:
            index.setdefault((s.task_name, s.language_name), s)
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_snippets(cls, snippets: Iterable[RawSnippet]) -> "Corpus":
        """Build a corpus keeping the first snippet in input order per (task, language)."""
        kept: list[RawSnippet] = []
        seen: set[tuple[str, str]] = set()
        dropped = 0
        for snip in snippets:
            key = (snip.task_name, snip.language_name)
            if key in seen:
                dropped += 1
                continue
            seen.add(key)
            kept.append(snip)
        if dropped:
            log.info("collapsed %d duplicate (task, language) snippets", dropped)
        return cls(
            snippets=tuple(kept),
            languages=frozenset(s.language_name for s in kept),
            tasks=frozenset(s.task_name for s in kept),
        )

    def tasks_for_language(self, language: str) -> frozenset[str]:
        return frozenset(s.task_name for s in self.snippets if s.language_name == language)

    def solution(self, task: str, language: str) -> RawSnippet | None:
        return self._index.get((task, language))


@dataclass(frozen=True)
class LanguageRanking:
    """Popularity ranking: (name, rank) with strictly increasing ranks."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        names = [n for n, _ in self.entries]
        ranks = [r for _, r in self.entries]
        if len(set(names)) != len(names):
            raise CorpusError("ranking contains duplicate language names")
        if any(r <= 0 for r in ranks):
            raise CorpusError("ranks must be positive integers")
        if any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise CorpusError("ranks must be strictly increasing")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.entries)


@dataclass(frozen=True)
class PairSpec:
    """Ordered (src, dst) language pair with the tasks solved in both."""

    src: str
    dst: str
    task_ids: frozenset[str]

    @property
    def set_label(self) -> str:
        return f"{self.dst}_from_{self.src}"


def load_aliases(path: str | Path | None = None) -> dict[str, str]:
    """Load a language alias registry: ``alias<TAB>canonical`` per line."""
    path = Path(path) if path is not None else DEFAULT_ALIAS_FILE
    aliases: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{path}:{lineno}: expected 'alias<TAB>canonical'")
            aliases[parts[0].strip().lower()] = parts[1].strip()
    return aliases


def canonicalize_language(name: str, aliases: dict[str, str]) -> str:
    """Map a language name to its canonical form, case-insensitively.

    Names matching neither an alias nor a canonical form pass through
    unchanged; they are typically dropped later by ranking filters.
    """
    lowered = name.strip().lower()
    if lowered in aliases:
        return aliases[lowered]
    for canonical in aliases.values():
        if lowered == canonical.lower():
            return canonical
    return name.strip()


def load_ranking(path: str | Path | None = None, aliases: dict[str, str] | None = None) -> LanguageRanking:
    """Load a language ranking file: ``name<TAB>rank`` per line."""
    path = Path(path) if path is not None else DEFAULT_RANKING_FILE
    aliases = aliases if aliases is not None else load_aliases()
    entries: list[tuple[str, int]] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{path}:{lineno}: expected 'name<TAB>rank'")
            try:
                rank = int(parts[1])
            except ValueError as exc:
                raise CorpusError(f"{path}:{lineno}: rank must be an integer") from exc
            entries.append((canonicalize_language(parts[0], aliases), rank))
    return LanguageRanking(entries=tuple(entries))


def load_corpus(path: str | Path, aliases: dict[str, str] | None = None) -> Corpus:
    """Load a JSONL corpus file, canonicalize language names, and deduplicate.

    Raises on unreadable files, malformed records (with line numbers), and
    snippets whose code is empty after trimming.
    """
    path = Path(path)
    aliases = aliases if aliases is not None else load_aliases()
    snippets: list[RawSnippet] = []
    for idx, snip in enumerate(read_raw_snippets(path), start=1):
        if not snip.code.strip():
            raise CorpusError(f"{path}: record {idx}: code is empty after trimming")
        canonical = canonicalize_language(snip.language_name, aliases)
        if canonical != snip.language_name:
            snip = RawSnippet(
                task_name=snip.task_name,
                task_url=snip.task_url,
                task_description=snip.task_description,
                language_name=canonical,
                code=snip.code,
            )
        snippets.append(snip)
    corpus = Corpus.from_snippets(snippets)
    log.info(
        "loaded corpus %s: %d snippets, %d tasks, %d languages",
        path, len(corpus.snippets), len(corpus.tasks), len(corpus.languages),
    )
    return corpus


def filter_languages(corpus: Corpus, ranking: LanguageRanking, k: int) -> Corpus:
    """Restrict the corpus to the top-k ranked languages present in it.

    Snippet order is preserved. Raises when fewer than k ranked languages
    are present, naming the shortfall.
    """
    if k < 1:
        raise CorpusError(f"k must be >= 1, got {k}")
    present = [name for name in ranking.names if name in corpus.languages]
    if len(present) < k:
        raise CorpusError(
            f"only {len(present)} ranked languages present in corpus, need {k}: {present}"
        )
    keep = set(present[:k])
    filtered = tuple(s for s in corpus.snippets if s.language_name in keep)
    return Corpus(
        snippets=filtered,
        languages=frozenset(keep),
        tasks=frozenset(s.task_name for s in filtered),
    )


def balance_pair(corpus: Corpus, src: str, dst: str) -> PairSpec:
    """Compute the tasks with solutions in both src and dst."""
    if src == dst:
        raise CorpusError(f"src and dst must differ, both are {src!r}")
    for lang in (src, dst):
        if lang not in corpus.languages:
            raise CorpusError(f"language {lang!r} not present in corpus")
    task_ids = corpus.tasks_for_language(src) & corpus.tasks_for_language(dst)
    if not task_ids:
        log.warning("pair (%s -> %s) has no shared tasks", src, dst)
    return PairSpec(src=src, dst=dst, task_ids=frozenset(task_ids))


def all_pairs(corpus: Corpus) -> list[PairSpec]:
    """All ordered (src, dst) pairs over the corpus languages, sorted by (dst, src)."""
    langs = sorted(corpus.languages)
    return [
        balance_pair(corpus, src, dst)
        for dst in langs
        for src in langs
        if src != dst
    ]


def overlapping_tasks(dataset: "Dataset", dst: str) -> int:
    """Count tasks in language dst with AI solutions translated from every other language.

    The provenance universe is the dataset's full language set minus dst.
    """
    from .records import AI

    if dst not in dataset.languages:
        raise CorpusError(f"unknown language {dst!r}")
    provenances = set(dataset.languages) - {dst}
    covered: dict[str, set[str]] = {}
    for rec in dataset.records:
        if rec.language_name != dst or rec.target != AI:
            continue
        label_dst, _, label_src = rec.set.partition("_from_")
        if label_dst != dst:
            continue
        covered.setdefault(rec.task_name, set()).add(label_src)
    return sum(1 for srcs in covered.values() if provenances <= srcs)
