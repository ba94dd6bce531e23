from __future__ import annotations

import json
from collections import Counter

import numpy as np
import pytest

from codestylo.generation import Dataset, SubDataset, SubDatasetId
from codestylo.records import AI, HUMAN, SnippetRecord
from codestylo.sampling import (
    SamplePlan, SamplingError, plan_quotas, sample_multilingual, split_train_test,
    undersample_subdataset, write_sample_manifest, write_split_manifest,
)


def _record(task: str, lang: str, target: str, src: str) -> SnippetRecord:
    return SnippetRecord(task_name=task, task_url="", task_description="",
                         language_name=lang, code=f"{lang} {task} {target}",
                         target=target, set=f"{lang}_from_{src}")


def make_subdataset(n_human: int, n_ai: int, dst="Java", src="Python") -> SubDataset:
    records = [_record(f"T{i}", dst, HUMAN, src) for i in range(n_human)]
    records += [_record(f"T{i}", dst, AI, src) for i in range(n_ai)]
    return SubDataset(id=SubDatasetId(dst=dst, src=src), records=tuple(records))


def make_dataset(languages: list[str], tasks_per_cell: int, seed: int = 0) -> Dataset:
    """Every (dst, src) cell fully populated with tasks_per_cell shared tasks."""
    records = []
    for dst in languages:
        for src in languages:
            if src == dst:
                continue
            for t in range(tasks_per_cell):
                records.append(_record(f"T{t}", dst, HUMAN, src))
                records.append(_record(f"T{t}", dst, AI, src))
    return Dataset(records=tuple(records))


class TestUndersample:
    def test_paper_scale_counts(self):
        sd = make_subdataset(600, 580)
        out = undersample_subdataset(sd, 470, seed=1)
        counts = Counter(r.target for r in out.records)
        assert counts == {HUMAN: 470, AI: 470}

    def test_exact_size_is_identity(self):
        sd = make_subdataset(470, 470)
        out = undersample_subdataset(sd, 470, seed=99)
        assert sorted(r.task_name for r in out.records if r.target == HUMAN) == \
            sorted(r.task_name for r in sd.records if r.target == HUMAN)
        assert len(out.records) == 940

    def test_shortfall_names_class(self):
        sd = make_subdataset(470, 469)
        with pytest.raises(SamplingError, match="469 ai records, need 470"):
            undersample_subdataset(sd, 470, seed=0)

    def test_deterministic_under_seed(self):
        sd = make_subdataset(60, 55)
        a = undersample_subdataset(sd, 40, seed=7)
        b = undersample_subdataset(sd, 40, seed=7)
        c = undersample_subdataset(sd, 40, seed=8)
        assert a == b
        assert a != c

    def test_without_replacement(self):
        sd = make_subdataset(50, 50)
        out = undersample_subdataset(sd, 30, seed=3)
        for target in (HUMAN, AI):
            tasks = [r.task_name for r in out.records if r.target == target]
            assert len(tasks) == len(set(tasks)) == 30


class TestQuotas:
    def test_paper_quota_split_470_over_9(self):
        provenances = [f"L{i}" for i in range(9)]
        quotas = plan_quotas(470, provenances, seed=0)
        values = sorted(quotas.values())
        assert sum(values) == 470
        assert values == [52] * 7 + [53] * 2

    def test_per_class_9_gives_one_each(self):
        quotas = plan_quotas(9, [f"L{i}" for i in range(9)], seed=5)
        assert all(v == 1 for v in quotas.values())

    def test_remainder_assignment_is_seeded(self):
        provenances = [f"L{i}" for i in range(5)]
        a = plan_quotas(7, provenances, seed=1)
        b = plan_quotas(7, provenances, seed=1)
        assert a == b
        variants = {tuple(sorted(k for k, v in plan_quotas(7, provenances, seed=s).items() if v == 2))
                    for s in range(30)}
        assert len(variants) > 1

    def test_plan_validation(self):
        with pytest.raises(SamplingError):
            SamplePlan(per_class_count=5, seed=0, provenance_quota={"A": 2, "B": 2})
        with pytest.raises(SamplingError):
            SamplePlan(per_class_count=6, seed=0, provenance_quota={"A": 4, "B": 2})


def check_multilingual_invariants(sampled: Dataset, n: int, languages: list[str]):
    for dst in languages:
        recs = [r for r in sampled.records if r.language_name == dst]
        counts = Counter(r.target for r in recs)
        assert counts == {HUMAN: n, AI: n}
        for target in (HUMAN, AI):
            tasks = [r.task_name for r in recs if r.target == target]
            assert len(tasks) == len(set(tasks))
        provenances = set(languages) - {dst}
        src_counts = Counter(
            r.set.partition("_from_")[2] for r in recs if r.target == AI
        )
        assert set(src_counts) <= provenances
        assert sum(src_counts.values()) == n
        per_src = [src_counts.get(src, 0) for src in provenances]
        assert max(per_src) - min(per_src) <= 1


class TestSampleMultilingual:
    def test_uniform_quota_and_task_uniqueness(self):
        languages = ["A", "B", "C", "D"]
        ds = make_dataset(languages, tasks_per_cell=30)
        sampled = sample_multilingual(ds, SamplePlan(per_class_count=9, seed=4))
        check_multilingual_invariants(sampled, 9, languages)

    def test_explicit_quota_map(self):
        languages = ["A", "B", "C"]
        ds = make_dataset(languages, tasks_per_cell=20)
        with pytest.raises(SamplingError, match="quota keys"):
            sample_multilingual(ds, SamplePlan(4, 0, {"A": 2, "X": 2}))

    def test_infeasible_cell_named(self):
        languages = ["A", "B", "C"]
        records = [r for r in make_dataset(languages, tasks_per_cell=10).records
                   if not (r.language_name == "A" and r.target == AI
                           and r.set == "A_from_B")]
        ds = Dataset(records=tuple(records))
        with pytest.raises(SamplingError, match=r"\(A, B\)"):
            sample_multilingual(ds, SamplePlan(per_class_count=10, seed=0))

    def test_deterministic(self):
        ds = make_dataset(["A", "B", "C"], tasks_per_cell=25)
        one = sample_multilingual(ds, SamplePlan(per_class_count=8, seed=11))
        two = sample_multilingual(ds, SamplePlan(per_class_count=8, seed=11))
        assert one == two

    def test_randomized_fixtures_hold_invariants(self):
        rng = np.random.default_rng(2024)
        for trial in range(25):
            languages = [f"L{i}" for i in range(int(rng.integers(3, 6)))]
            n = int(rng.integers(2, 7))
            tasks = n * len(languages) + int(rng.integers(2, 10))
            ds = make_dataset(languages, tasks_per_cell=tasks)
            sampled = sample_multilingual(
                ds, SamplePlan(per_class_count=n, seed=int(rng.integers(0, 10_000)))
            )
            check_multilingual_invariants(sampled, n, languages)


class TestSplit:
    def test_80_20_arithmetic_on_940(self):
        ds = Dataset(records=make_subdataset(470, 470).records)
        split = split_train_test(ds, 0.8, "random_stratified", seed=0)
        assert len(split.train) == 752
        assert len(split.test) == 188
        for side in (split.train, split.test):
            counts = Counter(r.target for r in side)
            assert abs(counts[HUMAN] - counts[AI]) <= 1
        train_ids = {id(r) for r in split.train}
        assert not train_ids & {id(r) for r in split.test}

    def test_two_records_fifty_fifty(self):
        ds = Dataset(records=make_subdataset(1, 1).records)
        split = split_train_test(ds, 0.5, "random_stratified", seed=0)
        assert len(split.train) == 1
        assert len(split.test) == 1

    def test_task_grouped_keeps_pairs_together(self):
        ds = Dataset(records=make_subdataset(40, 40).records)
        split = split_train_test(ds, 0.75, "task_grouped", seed=2)
        train_tasks = {r.task_name for r in split.train}
        test_tasks = {r.task_name for r in split.test}
        assert not train_tasks & test_tasks
        both = [r for r in ds.records if r.task_name == "T0"]
        sides = [("T0" in train_tasks), ("T0" in test_tasks)]
        assert sum(sides) == 1 and len(both) == 2

    def test_split_ratio_within_one_record(self):
        rng = np.random.default_rng(9)
        for trial in range(40):
            n_h = int(rng.integers(2, 40))
            n_a = int(rng.integers(2, 40))
            ratio = float(rng.uniform(0.2, 0.9))
            ds = Dataset(records=make_subdataset(n_h, n_a).records)
            split = split_train_test(ds, ratio, "random_stratified",
                                     seed=int(rng.integers(0, 1000)))
            total = len(split.train) + len(split.test)
            assert total == n_h + n_a
            # per-class rounding keeps each side within one record per class
            assert abs(len(split.train) - ratio * total) <= 2

    def test_determinism_and_bad_inputs(self):
        ds = Dataset(records=make_subdataset(10, 10).records)
        a = split_train_test(ds, 0.8, "random_stratified", seed=5)
        b = split_train_test(ds, 0.8, "random_stratified", seed=5)
        assert a == b
        with pytest.raises(SamplingError):
            split_train_test(ds, 1.0, "random_stratified", seed=0)
        with pytest.raises(SamplingError):
            split_train_test(ds, 0.5, "nonsense", seed=0)


class TestManifests:
    def test_sample_manifest_lists_every_key(self, tmp_path):
        ds = make_dataset(["A", "B"], tasks_per_cell=4)
        path = tmp_path / "manifest.jsonl"
        write_sample_manifest(ds, path)
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(rows) == len(ds.records)
        assert rows[0].keys() == {"set", "task_name", "target"}

    def test_split_manifest_sides(self, tmp_path):
        ds = Dataset(records=make_subdataset(6, 6).records)
        split = split_train_test(ds, 0.5, "random_stratified", seed=1)
        path = tmp_path / "split.jsonl"
        write_split_manifest(split, path)
        rows = [json.loads(line) for line in path.read_text().splitlines()]
        assert Counter(r["side"] for r in rows) == {"train": 6, "test": 6}
