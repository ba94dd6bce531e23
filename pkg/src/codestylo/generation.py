"""AI snippet generation: prompting, response validation, and dataset assembly.

Each sub-dataset ``<Dst>_from_<Src>`` pairs every shared task's human
solution in Dst with (when translation succeeds) an AI translation of the
Src solution into Dst. Responses are cached on disk so re-runs never
re-query the completion endpoint.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

from .clients import CompletionClient, TransportError, whitespace_token_count
from .corpus import Corpus, PairSpec
from .records import AI, HUMAN, RawSnippet, SnippetRecord

log = logging.getLogger(__name__)

FENCE = "```"
DEFAULT_PROMPT_TEMPLATE = (
    "Translate this ```\n{code}\n``` from {src} to {dst}."
    " Here is the translated code\n\n```"
)

STATUS_OK = "ok"
STATUS_EMPTY = "empty"
STATUS_UNTERMINATED = "unterminated"
STATUS_OVER_LENGTH = "over_length"
STATUS_TRANSPORT_ERROR = "transport_error"


class GenerationError(RuntimeError):
    pass


class PromptTooLongError(GenerationError):
    def __init__(self, tokens: int, limit: int):
        super().__init__(f"rendered prompt has {tokens} tokens, limit is {limit}")
        self.tokens = tokens
        self.limit = limit


class CacheError(RuntimeError):
    pass


@dataclass(frozen=True)
class TokenLimits:
    prompt: int = 1024
    generation: int = 2048

    def __post_init__(self) -> None:
        if self.prompt <= 0 or self.generation <= 0:
            raise ValueError("token limits must be positive")


@dataclass(frozen=True)
class PromptSpec:
    template_text: str
    code_snippet: str
    source_language: str
    target_language: str
    rendered: str
    prompt_tokens: int


@dataclass(frozen=True)
class GenerationResult:
    raw_text: str
    status: str
    extracted_code: str | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0


class SubDatasetId(NamedTuple):
    dst: str
    src: str

    @property
    def label(self) -> str:
        return f"{self.dst}_from_{self.src}"


@dataclass(frozen=True)
class SubDataset:
    id: SubDatasetId
    records: tuple[SnippetRecord, ...]

    def __post_init__(self) -> None:
        per_task: dict[tuple[str, str], int] = {}
        for rec in self.records:
            if rec.language_name != self.id.dst:
                raise GenerationError(
                    f"sub-dataset {self.id.label}: record language {rec.language_name!r}"
                    f" differs from dst {self.id.dst!r}"
                )
            if rec.set != self.id.label:
                raise GenerationError(
                    f"sub-dataset {self.id.label}: record carries set label {rec.set!r}"
                )
            key = (rec.task_name, rec.target)
            per_task[key] = per_task.get(key, 0) + 1
            if per_task[key] > 1:
                raise GenerationError(
                    f"sub-dataset {self.id.label}: duplicate {rec.target} record"
                    f" for task {rec.task_name!r}"
                )


@dataclass(frozen=True)
class Dataset:
    """Union of sub-datasets; one labeled record per row."""

    records: tuple[SnippetRecord, ...]

    @property
    def languages(self) -> frozenset[str]:
        return frozenset(r.language_name for r in self.records)

    @property
    def tasks(self) -> frozenset[str]:
        return frozenset(r.task_name for r in self.records)

    @property
    def sets(self) -> frozenset[str]:
        return frozenset(r.set for r in self.records)

    def summary(self) -> dict:
        per_set: dict[str, int] = {}
        per_language: dict[str, int] = {}
        per_target: dict[str, int] = {}
        for r in self.records:
            per_set[r.set] = per_set.get(r.set, 0) + 1
            per_language[r.language_name] = per_language.get(r.language_name, 0) + 1
            per_target[r.target] = per_target.get(r.target, 0) + 1
        return {
            "records": len(self.records),
            "tasks": len(self.tasks),
            "languages": len(self.languages),
            "per_set": dict(sorted(per_set.items())),
            "per_language": dict(sorted(per_language.items())),
            "per_target": dict(sorted(per_target.items())),
        }


def clean_snippet(code: str) -> str:
    """Strip all leading/trailing whitespace; interior bytes are untouched."""
    return code.strip()


def build_prompt(
    snippet: RawSnippet,
    src: str,
    dst: str,
    limits: TokenLimits,
    token_counter: Callable[[str], int] = whitespace_token_count,
    template: str = DEFAULT_PROMPT_TEMPLATE,
) -> PromptSpec:
    """Render the translation prompt and enforce the prompt token budget."""
    if snippet.language_name != src:
        raise GenerationError(
            f"snippet language {snippet.language_name!r} does not match src {src!r}"
        )
    if src == dst:
        raise GenerationError(f"src and dst must differ, both are {src!r}")
    if not snippet.code.strip():
        raise GenerationError("snippet code is empty")
    rendered = template.format(code=snippet.code, src=src, dst=dst)
    tokens = token_counter(rendered)
    if tokens > limits.prompt:
        raise PromptTooLongError(tokens, limits.prompt)
    return PromptSpec(
        template_text=template,
        code_snippet=snippet.code,
        source_language=src,
        target_language=dst,
        rendered=rendered,
        prompt_tokens=tokens,
    )


def extract_code(raw_text: str) -> tuple[str, str | None]:
    """Classify a completion and pull the code before its closing fence.

    Returns (status, cleaned_code_or_None). The prompt ends with an opening
    fence, so the completion is code up to the first fence it contains.
    """
    if not raw_text.strip():
        return STATUS_EMPTY, None
    idx = raw_text.find(FENCE)
    if idx < 0:
        return STATUS_UNTERMINATED, None
    code = clean_snippet(raw_text[:idx])
    if not code:
        return STATUS_EMPTY, None
    return STATUS_OK, code


class ResponseCache:
    """Content-addressed on-disk cache of completion results.

    Files are keyed by the hash of (rendered prompt, decoding params) and
    written atomically, so concurrent workers can share one cache directory.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(rendered_prompt: str, params: dict) -> str:
        blob = json.dumps({"prompt": rendered_prompt, "params": params}, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with path.open("r", encoding="utf-8") as fh:
                return json.load(fh)
        except (json.JSONDecodeError, OSError) as exc:
            raise CacheError(f"corrupt cache entry {path}: {exc}") from exc

    def put(self, key: str, payload: dict) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp.{os.getpid()}")
        with tmp.open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
        os.replace(tmp, path)


def translate(
    client: CompletionClient,
    prompt: PromptSpec,
    limits: TokenLimits,
    cache: ResponseCache | None = None,
    retries: int = 3,
    backoff: float = 0.5,
) -> GenerationResult:
    """Run one translation request through the cache, client, and extractor.

    Transport failures are retried with exponential backoff; once retries
    are exhausted the result carries status ``transport_error`` and is not
    cached. All other outcomes (including malformed completions) are cached.
    """
    params = {"max_new_tokens": limits.generation, "greedy": True}
    key = ResponseCache.key(prompt.rendered, params)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return GenerationResult(
                raw_text=hit["raw_text"],
                status=hit["status"],
                extracted_code=hit["extracted_code"],
                prompt_tokens=hit["prompt_tokens"],
                completion_tokens=hit["completion_tokens"],
            )

    completion = None
    for attempt in range(retries):
        try:
            completion = client.complete(
                prompt.rendered, max_new_tokens=limits.generation, greedy=True
            )
            break
        except TransportError as exc:
            log.warning("transport failure (attempt %d/%d): %s", attempt + 1, retries, exc)
            if attempt + 1 < retries:
                time.sleep(backoff * (2**attempt))
    if completion is None:
        return GenerationResult(raw_text="", status=STATUS_TRANSPORT_ERROR)

    status, code = extract_code(completion.text)
    result = GenerationResult(
        raw_text=completion.text,
        status=status,
        extracted_code=code,
        prompt_tokens=completion.prompt_tokens,
        completion_tokens=completion.completion_tokens,
    )
    if cache is not None:
        cache.put(
            key,
            {
                "raw_text": result.raw_text,
                "status": result.status,
                "extracted_code": result.extracted_code,
                "prompt_tokens": result.prompt_tokens,
                "completion_tokens": result.completion_tokens,
            },
        )
    return result


@dataclass
class GenerationSettings:
    limits: TokenLimits = field(default_factory=TokenLimits)
    token_counter: Callable[[str], int] = whitespace_token_count
    template: str = DEFAULT_PROMPT_TEMPLATE
    retries: int = 3
    backoff: float = 0.5


def build_subdataset(
    corpus: Corpus,
    pair: PairSpec,
    client: CompletionClient,
    cache: ResponseCache | None = None,
    settings: GenerationSettings | None = None,
) -> SubDataset:
    """Build one ``<Dst>_from_<Src>`` sub-dataset from a balanced pair.

    For every shared task: the cleaned Dst human solution is always kept;
    the Src solution is translated into Dst and kept only when the
    completion validates. Failed translations are logged with their reason.
    Transport failures surviving the retry policy abort the build.
    """
    settings = settings or GenerationSettings()
    sid = SubDatasetId(dst=pair.dst, src=pair.src)
    records: list[SnippetRecord] = []
    skipped: dict[str, int] = {}
    for task in sorted(pair.task_ids):
        dst_snip = corpus.solution(task, pair.dst)
        src_snip = corpus.solution(task, pair.src)
        if dst_snip is None or src_snip is None:
            raise GenerationError(f"pair {sid.label}: task {task!r} missing a solution")
        records.append(
            SnippetRecord(
                task_name=dst_snip.task_name,
                task_url=dst_snip.task_url,
                task_description=dst_snip.task_description,
                language_name=pair.dst,
                code=clean_snippet(dst_snip.code),
                target=HUMAN,
                set=sid.label,
            )
        )
        try:
            prompt = build_prompt(
                src_snip, pair.src, pair.dst, settings.limits,
                token_counter=settings.token_counter, template=settings.template,
            )
        except PromptTooLongError as exc:
            log.info("%s/%s: skipped (%s: %s)", sid.label, task, STATUS_OVER_LENGTH, exc)
            skipped[STATUS_OVER_LENGTH] = skipped.get(STATUS_OVER_LENGTH, 0) + 1
            continue
        result = translate(
            client, prompt, settings.limits, cache=cache,
            retries=settings.retries, backoff=settings.backoff,
        )
        if result.status == STATUS_TRANSPORT_ERROR:
            raise GenerationError(
                f"{sid.label}/{task}: transport failure after {settings.retries} retries"
            )
        if result.status != STATUS_OK:
            log.info("%s/%s: translation dropped (%s)", sid.label, task, result.status)
            skipped[result.status] = skipped.get(result.status, 0) + 1
            continue
        records.append(
            SnippetRecord(
                task_name=dst_snip.task_name,
                task_url=dst_snip.task_url,
                task_description=dst_snip.task_description,
                language_name=pair.dst,
                code=result.extracted_code or "",
                target=AI,
                set=sid.label,
            )
        )
    if skipped:
        log.info("%s: skipped translations by reason: %s", sid.label, skipped)
    return SubDataset(id=sid, records=tuple(records))


def assemble_dataset(subdatasets: Sequence[SubDataset]) -> Dataset:
    """Concatenate sub-datasets into one dataset with schema validation."""
    seen: set[tuple[str, str, str]] = set()
    records: list[SnippetRecord] = []
    for sd in subdatasets:
        for rec in sd.records:
            key = (rec.set, rec.task_name, rec.target)
            if key in seen:
                raise GenerationError(f"duplicate (set, task, target) key: {key}")
            seen.add(key)
            if clean_snippet(rec.code) != rec.code:
                raise GenerationError(
                    f"record {key} carries untrimmed code; clean_snippet must be applied"
                )
            dst, sep, src = rec.set.partition("_from_")
            if not sep or not dst or not src:
                raise GenerationError(f"record {key} has malformed set label {rec.set!r}")
            records.append(rec)
    dataset = Dataset(records=tuple(records))
    log.info("assembled dataset: %s", dataset.summary())
    return dataset


def iter_subdatasets(dataset: Dataset) -> Iterable[SubDataset]:
    """Split a dataset back into its sub-datasets, sorted by set label."""
    by_set: dict[str, list[SnippetRecord]] = {}
    for rec in dataset.records:
        by_set.setdefault(rec.set, []).append(rec)
    for label in sorted(by_set):
        dst, _, src = label.partition("_from_")
        yield SubDataset(id=SubDatasetId(dst=dst, src=src), records=tuple(by_set[label]))
