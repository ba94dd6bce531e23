from __future__ import annotations

import numpy as np
import pytest

from codestylo.corpus import (
    Corpus, CorpusError, LanguageRanking, all_pairs, balance_pair,
    canonicalize_language, filter_languages, load_aliases, load_corpus,
    load_ranking, overlapping_tasks,
)
from codestylo.generation import Dataset
from codestylo.records import AI, HUMAN, RawSnippet, SnippetRecord, write_records

from conftest import make_corpus


def _snip(task: str, lang: str, code: str = "x = 1\n") -> RawSnippet:
    return RawSnippet(task_name=task, task_url="u", task_description="d",
                      language_name=lang, code=code)


def test_load_corpus_roundtrip(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    write_records(path, small_corpus.snippets)
    loaded = load_corpus(path)
    assert loaded.snippets == small_corpus.snippets
    assert loaded.tasks == small_corpus.tasks
    assert loaded.languages == small_corpus.languages


def test_load_corpus_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    corpus = load_corpus(path)
    assert len(corpus.snippets) == 0
    assert len(corpus.tasks) == 0


def test_load_corpus_dedups_first_in_file_order(tmp_path):
    rows = [
        _snip("T1", "Python", "first = 1\n"),
        _snip("T1", "Python", "second = 2\n"),
        _snip("T2", "Python"),
    ]
    path = tmp_path / "dup.jsonl"
    write_records(path, rows)
    corpus = load_corpus(path)
    assert len(corpus.snippets) == 2
    kept = corpus.solution("T1", "Python")
    assert kept.code == "first = 1\n"


def test_dedup_idempotent():
    rows = [_snip("T1", "Python", "a\n"), _snip("T1", "Python", "b\n"), _snip("T2", "Go")]
    once = Corpus.from_snippets(rows)
    twice = Corpus.from_snippets(once.snippets)
    assert once == twice


def test_load_corpus_rejects_blank_code(tmp_path):
    path = tmp_path / "blank.jsonl"
    write_records(path, [_snip("T1", "Python", "   \n\t")])
    with pytest.raises(CorpusError, match="record 1"):
        load_corpus(path)


def test_load_corpus_reports_malformed_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"task_name": "T"}\n', encoding="utf-8")
    with pytest.raises(Exception, match=":1"):
        load_corpus(path)


def test_canonicalization_via_registry(tmp_path):
    aliases = load_aliases()
    assert canonicalize_language("c sharp", aliases) == "C#"
    assert canonicalize_language("JAVASCRIPT", aliases) == "JavaScript"
    assert canonicalize_language("golang", aliases) == "Go"
    assert canonicalize_language("Forth", aliases) == "Forth"

    path = tmp_path / "c.jsonl"
    write_records(path, [_snip("T1", "python3")])
    corpus = load_corpus(path)
    assert corpus.languages == frozenset({"Python"})


def test_default_ranking_top10_matches_supported_set():
    ranking = load_ranking()
    ten = ["C++", "C", "C#", "Go", "Java", "JavaScript", "Kotlin", "Python", "Ruby", "Rust"]
    corpus = make_corpus(ten + ["Forth"], n_tasks=2)
    filtered = filter_languages(corpus, ranking, 10)
    assert filtered.languages == frozenset(ten)


def test_filter_languages_k1():
    corpus = make_corpus(["Python", "Java"], n_tasks=3)
    ranking = LanguageRanking(entries=(("Python", 1),))
    filtered = filter_languages(corpus, ranking, 1)
    assert filtered.languages == frozenset({"Python"})
    assert all(s.language_name == "Python" for s in filtered.snippets)


def test_filter_languages_removes_lowest_rank_and_preserves_order():
    corpus = make_corpus(["Python", "Java", "Go"], n_tasks=4)
    ranking = LanguageRanking(entries=(("Python", 1), ("Java", 2), ("Go", 3)))
    filtered = filter_languages(corpus, ranking, 2)
    assert filtered.languages == frozenset({"Python", "Java"})
    kept = [s for s in corpus.snippets if s.language_name != "Go"]
    assert list(filtered.snippets) == kept


def test_filter_languages_shortfall_error():
    corpus = make_corpus(["Python"], n_tasks=2)
    ranking = LanguageRanking(entries=(("Python", 1), ("Java", 2)))
    with pytest.raises(CorpusError, match="only 1 ranked"):
        filter_languages(corpus, ranking, 2)


def test_filter_languages_size_property():
    rng = np.random.default_rng(7)
    pool = ["Python", "Java", "Go", "Ruby", "Rust", "C"]
    for _ in range(50):
        langs = list(rng.choice(pool, size=rng.integers(1, len(pool) + 1), replace=False))
        corpus = make_corpus(langs, n_tasks=2)
        ranked = [(lang, i + 1) for i, lang in enumerate(pool)]
        ranking = LanguageRanking(entries=tuple(ranked))
        available = len(set(langs))
        k = int(rng.integers(1, available + 1))
        filtered = filter_languages(corpus, ranking, k)
        assert len(filtered.languages) == min(k, available) == k


def test_ranking_validation():
    with pytest.raises(CorpusError):
        LanguageRanking(entries=(("A", 2), ("B", 2)))
    with pytest.raises(CorpusError):
        LanguageRanking(entries=(("A", 1), ("A", 2)))
    with pytest.raises(CorpusError):
        LanguageRanking(entries=(("A", 0),))


def test_balance_pair_intersection():
    snippets = [_snip("T1", "Python"), _snip("T1", "Java"),
                _snip("T2", "Python"), _snip("T3", "Java")]
    corpus = Corpus.from_snippets(snippets)
    pair = balance_pair(corpus, "Python", "Java")
    assert pair.task_ids == frozenset({"T1"})


def test_balance_pair_disjoint_is_valid_and_empty():
    corpus = Corpus.from_snippets([_snip("T1", "Python"), _snip("T2", "Java")])
    pair = balance_pair(corpus, "Python", "Java")
    assert pair.task_ids == frozenset()


def test_balance_pair_same_language_rejected(small_corpus):
    with pytest.raises(CorpusError):
        balance_pair(small_corpus, "Python", "Python")


def test_balance_pair_symmetry_random_fixtures():
    rng = np.random.default_rng(11)
    for trial in range(30):
        snippets = []
        for t in range(10):
            for lang in ("A", "B"):
                if rng.random() < 0.6:
                    snippets.append(_snip(f"T{t}", lang))
        corpus = Corpus.from_snippets(snippets)
        if {"A", "B"} - corpus.languages:
            continue
        ab = balance_pair(corpus, "A", "B")
        ba = balance_pair(corpus, "B", "A")
        assert ab.task_ids == ba.task_ids
        for task in ab.task_ids:
            assert corpus.solution(task, "A") is not None
            assert corpus.solution(task, "B") is not None


def test_ten_language_fixture_yields_90_pairs():
    ten = ["C++", "C", "C#", "Go", "Java", "JavaScript", "Kotlin", "Python", "Ruby", "Rust"]
    corpus = make_corpus(ten, n_tasks=2)
    pairs = all_pairs(corpus)
    assert len(pairs) == 90
    assert len({(p.src, p.dst) for p in pairs}) == 90


def _ai_record(task: str, dst: str, src: str) -> SnippetRecord:
    return SnippetRecord(task_name=task, task_url="", task_description="",
                         language_name=dst, code="x", target=AI,
                         set=f"{dst}_from_{src}")


def test_overlapping_tasks_definition():
    langs = ("A", "B", "C")
    records = [
        SnippetRecord("T1", "", "", lang, "h", HUMAN, f"{lang}_from_{other}")
        for lang in langs for other in langs if other != lang
    ]
    # T1 in A translated from both B and C -> counted; T2 only from B -> not
    records += [_ai_record("T1", "A", "B"), _ai_record("T1", "A", "C"),
                _ai_record("T2", "A", "B")]
    ds = Dataset(records=tuple(records))
    assert overlapping_tasks(ds, "A") == 1
    with pytest.raises(CorpusError):
        overlapping_tasks(ds, "Z")


def test_overlapping_tasks_matches_bruteforce():
    rng = np.random.default_rng(5)
    langs = ("A", "B", "C")
    for trial in range(20):
        records = [SnippetRecord("T0", "", "", lang, "h", HUMAN, f"{lang}_from_A")
                   for lang in langs]
        for task in range(8):
            for dst in langs:
                for src in langs:
                    if src != dst and rng.random() < 0.5:
                        records.append(_ai_record(f"T{task}", dst, src))
        ds = Dataset(records=tuple(records))
        for dst in langs:
            provs = set(langs) - {dst}
            expected = 0
            for task in {r.task_name for r in records}:
                got = {
                    r.set.partition("_from_")[2]
                    for r in records
                    if r.task_name == task and r.language_name == dst and r.target == AI
                }
                if provs <= got:
                    expected += 1
            assert overlapping_tasks(ds, dst) == expected
