"""Class-balanced undersampling, uniform-provenance multilingual sampling, and splits.

All sampling is driven by a named, seeded generator (PCG64) so every
decision replays exactly; manifests of the selected (set, task, target)
keys make each run externally auditable.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .generation import Dataset, SubDataset
from .records import AI, HUMAN, SnippetRecord

RNG_ALGORITHM = "pcg64"


class SamplingError(ValueError):
    pass


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Seeded PCG64 generator; extra integers derive independent substreams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


@dataclass(frozen=True)
class SamplePlan:
    """Per-destination sampling plan for the multilingual set.

    ``provenance_quota`` fixes how many AI snippets to draw per source
    language; when omitted it is computed from the destination's provenance
    set: near-equal shares with the remainder assigned in seeded-shuffled
    order.
    """

    per_class_count: int
    seed: int
    provenance_quota: dict[str, int] | None = None

    def __post_init__(self) -> None:
        if self.per_class_count < 1:
            raise SamplingError("per_class_count must be >= 1")
        if self.provenance_quota is not None:
            total = sum(self.provenance_quota.values())
            if total != self.per_class_count:
                raise SamplingError(
                    f"provenance quotas sum to {total}, expected {self.per_class_count}"
                )
            values = list(self.provenance_quota.values())
            if max(values) - min(values) > 1:
                raise SamplingError("provenance quotas must differ by at most 1")


def plan_quotas(per_class_count: int, provenances: list[str], seed: int) -> dict[str, int]:
    """Near-uniform integer quotas over provenances, remainder seeded-shuffled."""
    if not provenances:
        raise SamplingError("no provenance languages to plan quotas for")
    k = len(provenances)
    base, rem = divmod(per_class_count, k)
    order = sorted(provenances)
    rng = make_rng(seed, 0xC0DA)
    shuffled = list(rng.permutation(order))
    bonus = set(shuffled[:rem])
    return {src: base + (1 if src in bonus else 0) for src in order}


def undersample_subdataset(sd: SubDataset, n: int, seed: int) -> SubDataset:
    """Sample exactly n human and n AI records without replacement."""
    if n < 1:
        raise SamplingError(f"per-class count must be >= 1, got {n}")
    humans = [r for r in sd.records if r.target == HUMAN]
    ais = [r for r in sd.records if r.target == AI]
    for name, group in ((HUMAN, humans), (AI, ais)):
        if len(group) < n:
            raise SamplingError(
                f"sub-dataset {sd.id.label}: {len(group)} {name} records, need {n}"
                f" (short by {n - len(group)})"
            )
    rng = make_rng(seed, zlib.crc32(sd.id.label.encode("utf-8")))
    keep: list[SnippetRecord] = []
    for group in (humans, ais):
        idx = sorted(rng.choice(len(group), size=n, replace=False).tolist())
        keep.extend(group[i] for i in idx)
    return SubDataset(id=sd.id, records=tuple(keep))


def _select_ai_records(
    dst: str,
    by_src: dict[str, list[SnippetRecord]],
    quotas: dict[str, int],
    seed: int,
) -> list[SnippetRecord]:
    # Greedy selection with scarcest source first; deterministic restarts
    # reshuffle the draw when task collisions dead-end a feasible instance.
    order = sorted(quotas, key=lambda s: (len(by_src.get(s, [])), s))
    last_short: tuple[str, int] | None = None
    for attempt in range(20):
        rng = make_rng(seed, 0xA1, attempt)
        used_tasks: set[str] = set()
        chosen: list[SnippetRecord] = []
        feasible = True
        for src in order:
            pool = [r for r in by_src.get(src, []) if r.task_name not in used_tasks]
            if len(pool) < quotas[src]:
                last_short = (src, quotas[src] - len(pool))
                feasible = False
                break
            idx = rng.choice(len(pool), size=quotas[src], replace=False)
            for i in sorted(idx.tolist()):
                chosen.append(pool[i])
                used_tasks.add(pool[i].task_name)
        if feasible:
            return chosen
    src, short = last_short if last_short else ("?", 0)
    raise SamplingError(
        f"cannot fill provenance quota for ({dst}, {src}): short by {short}"
        " distinct-task AI records"
    )


def sample_multilingual(dataset: Dataset, plan: SamplePlan) -> Dataset:
    """Draw the multilingual training set from the assembled dataset.

    Per destination language: exactly ``per_class_count`` human and
    ``per_class_count`` AI records; AI records follow the provenance quotas;
    no task repeats within a (language, target) group.
    """
    languages = sorted(dataset.languages)
    out: list[SnippetRecord] = []
    for li, dst in enumerate(languages):
        ai_by_src: dict[str, list[SnippetRecord]] = {}
        human_by_task: dict[str, SnippetRecord] = {}
        for rec in dataset.records:
            if rec.language_name != dst:
                continue
            if rec.target == AI:
                _, _, src = rec.set.partition("_from_")
                ai_by_src.setdefault(src, []).append(rec)
            elif rec.task_name not in human_by_task or rec.set < human_by_task[rec.task_name].set:
                human_by_task[rec.task_name] = rec

        provenances = [lang for lang in languages if lang != dst]
        if plan.provenance_quota is not None:
            if set(plan.provenance_quota) != set(provenances):
                raise SamplingError(
                    f"plan quota keys {sorted(plan.provenance_quota)} do not match"
                    f" provenances of {dst}: {provenances}"
                )
            quotas = dict(plan.provenance_quota)
        else:
            quotas = plan_quotas(plan.per_class_count, provenances, plan.seed + li)

        out.extend(_select_ai_records(dst, ai_by_src, quotas, plan.seed + li))

        tasks = sorted(human_by_task)
        if len(tasks) < plan.per_class_count:
            raise SamplingError(
                f"language {dst}: {len(tasks)} distinct-task human records,"
                f" need {plan.per_class_count}"
            )
        rng = make_rng(plan.seed + li, 0xB2)
        idx = sorted(rng.choice(len(tasks), size=plan.per_class_count, replace=False).tolist())
        out.extend(human_by_task[tasks[i]] for i in idx)
    return Dataset(records=tuple(out))


@dataclass(frozen=True)
class Split:
    train: tuple[SnippetRecord, ...]
    test: tuple[SnippetRecord, ...]
    ratio: float
    mode: str
    seed: int


def split_train_test(ds: Dataset, ratio: float, mode: str, seed: int) -> Split:
    """Split a dataset into train/test at the given ratio.

    ``random_stratified`` balances the target classes on both sides;
    ``task_grouped`` keeps all records of one task on one side.
    """
    if not 0.0 < ratio < 1.0:
        raise SamplingError(f"ratio must be in (0, 1), got {ratio}")
    records = list(ds.records)
    if len(records) < 2:
        raise SamplingError("dataset too small to split")
    rng = make_rng(seed, 0x51)

    train_idx: list[int] = []
    test_idx: list[int] = []
    if mode == "random_stratified":
        by_class: dict[str, list[int]] = {}
        for i, rec in enumerate(records):
            by_class.setdefault(rec.target, []).append(i)
        for ci, cls in enumerate(sorted(by_class)):
            idxs = by_class[cls]
            perm = rng.permutation(len(idxs))
            n_c = len(idxs)
            n_train = int(round(n_c * ratio))
            if n_c >= 2:
                n_train = min(max(n_train, 1), n_c - 1)
            else:
                n_train = 1 if ci % 2 == 0 else 0
            for j, p in enumerate(perm.tolist()):
                (train_idx if j < n_train else test_idx).append(idxs[p])
    elif mode == "task_grouped":
        by_task: dict[str, list[int]] = {}
        for i, rec in enumerate(records):
            by_task.setdefault(rec.task_name, []).append(i)
        tasks = sorted(by_task)
        perm = rng.permutation(len(tasks))
        target = ratio * len(records)
        count = 0
        for p in perm.tolist():
            group = by_task[tasks[p]]
            if abs(count + len(group) - target) <= abs(count - target):
                train_idx.extend(group)
                count += len(group)
            else:
                test_idx.extend(group)
    else:
        raise SamplingError(f"unknown split mode {mode!r}")

    if not train_idx or not test_idx:
        raise SamplingError("split left one side empty; dataset too small for ratio")
    train = tuple(records[i] for i in sorted(train_idx))
    test = tuple(records[i] for i in sorted(test_idx))
    return Split(train=train, test=test, ratio=ratio, mode=mode, seed=seed)


def write_sample_manifest(dataset: Dataset, path: str | Path) -> None:
    """Record every sampled (set, task, target) key, one JSON object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in dataset.records:
            fh.write(json.dumps(
                {"set": rec.set, "task_name": rec.task_name, "target": rec.target},
                ensure_ascii=False,
            ))
            fh.write("\n")


def write_split_manifest(split: Split, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for side, records in (("train", split.train), ("test", split.test)):
            for rec in records:
                fh.write(json.dumps(
                    {"side": side, "set": rec.set, "task_name": rec.task_name,
                     "target": rec.target},
                    ensure_ascii=False,
                ))
                fh.write("\n")
