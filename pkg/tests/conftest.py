from __future__ import annotations

import numpy as np
import pytest

from codestylo.clients import template_translation
from codestylo.corpus import Corpus
from codestylo.generation import Dataset, clean_snippet
from codestylo.records import AI, HUMAN, RawSnippet, SnippetRecord

WORDS = (
    "alpha", "beta", "gamma", "delta", "count", "total", "value", "index",
    "items", "node", "left", "right", "queue", "stack", "width", "depth",
)


def synthetic_code(task_idx: int, lang: str, rng: np.random.Generator) -> str:
    """Deterministic code-shaped text: a header line plus assignments."""
    if lang in ("Python", "Ruby"):
        lines = [f"def solve_{task_idx}():"]
        body = "    {a}_{i} = {b}_{j} + {v}"
        tail = "    return {a}_0"
    else:
        lines = [f"int solve_{task_idx}() {{"]
        body = "    int {a}_{i} = {b}_{j} + {v};"
        tail = "    return {a}_0; }}"
    n_lines = 4 + int(rng.integers(0, 4))
    for i in range(n_lines):
        a, b = rng.choice(WORDS, size=2, replace=False)
        lines.append(body.format(a=a, b=b, i=i, j=i % 3, v=int(rng.integers(0, 99))))
    lines.append(tail.format(a=rng.choice(WORDS)))
    return "\n".join(lines)


def make_corpus(languages: list[str], n_tasks: int, seed: int = 0) -> Corpus:
    rng = np.random.default_rng(seed)
    snippets = []
    for t in range(n_tasks):
        for lang in languages:
            snippets.append(RawSnippet(
                task_name=f"Task {t:03d}",
                task_url=f"http://rosettacode.org/wiki/Task_{t:03d}",
                task_description=f"Synthetic task number {t}",
                language_name=lang,
                code=synthetic_code(t, lang, rng) + "\n",
            ))
    return Corpus.from_snippets(snippets)


def make_planted_dataset(n_tasks: int, lang: str = "Python", src: str = "Java",
                         seed: int = 0) -> Dataset:
    """Human snippets plus template-perturbed AI copies (markers + reordered,
    whitespace-normalized lines)."""
    rng = np.random.default_rng(seed)
    records = []
    set_label = f"{lang}_from_{src}"
    for t in range(n_tasks):
        human = synthetic_code(t, lang, rng)
        ai = template_translation(human, src, lang)
        for target, code in ((HUMAN, human), (AI, ai)):
            records.append(SnippetRecord(
                task_name=f"Task {t:03d}", task_url="", task_description="",
                language_name=lang, code=clean_snippet(code),
                target=target, set=set_label,
            ))
    return Dataset(records=tuple(records))


@pytest.fixture
def small_corpus() -> Corpus:
    return make_corpus(["Python", "Java", "Go"], n_tasks=12, seed=3)


def write_desk_workspace(root, languages=("Python", "Java", "Go"), n_tasks=20,
                         seed=0, epochs=3, per_class="auto", corpus_seed=3):
    """Create a self-contained workspace: corpus, ranking, and run config."""
    import json

    from codestylo.records import write_records

    root.mkdir(parents=True, exist_ok=True)
    corpus = make_corpus(list(languages), n_tasks=n_tasks, seed=corpus_seed)
    write_records(root / "corpus.jsonl", corpus.snippets)
    ranking_lines = [f"{lang}\t{i + 1}" for i, lang in enumerate(languages)]
    (root / "ranking.tsv").write_text("\n".join(ranking_lines) + "\n", encoding="utf-8")
    config = {
        "paths": {
            "corpus": "corpus.jsonl",
            "cache": "cache",
            "datasets": "datasets",
            "checkpoints": "checkpoints",
            "reports": "reports",
        },
        "ranking_file": "ranking.tsv",
        "top_k": len(languages),
        "completion": {"endpoint": None, "workers": 1},
        "token_limits": {"prompt": 1024, "generation": 2048},
        "sample": {"per_class_count": per_class, "seed": seed},
        "split": {"ratio": 0.8, "mode": "random_stratified", "seed": seed},
        "encoder": {
            "variant": "small_scratch", "layers": 1, "hidden_dim": 32,
            "heads": 2, "max_len": 64, "vocab_size": 512, "dropout_rate": 0.2,
        },
        "train": {
            "optimizer": "adamw", "weight_decay": 0.01, "lr_initial": 3e-4,
            "epochs": epochs, "lr_decay_epoch": max(1, epochs - 1),
            "lr_decay_factor": 0.1, "batch_size": 8, "seed": seed,
        },
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return config_path
