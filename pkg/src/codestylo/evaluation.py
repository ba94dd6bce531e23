"""Experiment grids, length statistics, provenance-shift analysis.

A grid cell is one (destination language, provenance) sub-dataset
experiment: undersample, split, train, test in-distribution. The
multilingual mode trains a single model on the uniform-provenance sample
and tests it per language.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .generation import Dataset, iter_subdatasets
from .metrics import Metrics, compute_metrics
from .records import AI, HUMAN, SnippetRecord
from .sampling import SamplePlan, SamplingError, sample_multilingual, split_train_test, undersample_subdataset
from .stats import TTestResult, welch_ttest

log = logging.getLogger(__name__)

MULTILINGUAL = "multilingual"

# train_fn(train_records, seed) -> predict_fn(records) -> list[Prediction]
TrainFn = Callable[[Sequence[SnippetRecord], int], Callable[[Sequence[SnippetRecord]], list]]


class EvaluationError(ValueError):
    pass


@dataclass
class ExperimentGrid:
    """Metrics per (dst language, src provenance) cell plus marginals."""

    mode: str
    cells: dict[tuple[str, str], Metrics] = field(default_factory=dict)
    missing: dict[tuple[str, str], str] = field(default_factory=dict)

    @property
    def languages(self) -> list[str]:
        return sorted({dst for dst, _ in self.cells})

    @property
    def provenances(self) -> list[str]:
        return sorted({src for _, src in self.cells if src != MULTILINGUAL})

    def accuracies_for_language(self, dst: str) -> list[float]:
        return [m.accuracy for (d, _), m in sorted(self.cells.items()) if d == dst]

    def accuracies_for_provenance(self, src: str) -> list[float]:
        return [m.accuracy for (_, s), m in sorted(self.cells.items()) if s == src]

    def language_marginals(self) -> dict[str, tuple[float, float]]:
        return {
            dst: _mean_std(self.accuracies_for_language(dst)) for dst in self.languages
        }

    def provenance_marginals(self) -> dict[str, tuple[float, float]]:
        return {
            src: _mean_std(self.accuracies_for_provenance(src)) for src in self.provenances
        }


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(np.mean(arr)), float(np.std(arr))


@dataclass
class LengthStats:
    """Per-language snippet length (characters): mean/std by group plus a
    Welch test between the AI and human groups (difference human - AI)."""

    per_language: dict[str, dict] = field(default_factory=dict)


def length_stats(dataset: Dataset) -> LengthStats:
    if not dataset.records:
        raise EvaluationError("dataset is empty")
    stats = LengthStats()
    for lang in sorted(dataset.languages):
        ai_lengths = [len(r.code) for r in dataset.records
                      if r.language_name == lang and r.target == AI]
        human_lengths = [len(r.code) for r in dataset.records
                         if r.language_name == lang and r.target == HUMAN]
        all_lengths = ai_lengths + human_lengths
        entry: dict = {
            "all": _mean_std(all_lengths),
            "ai": _mean_std(ai_lengths) if ai_lengths else None,
            "human": _mean_std(human_lengths) if human_lengths else None,
            "n_ai": len(ai_lengths),
            "n_human": len(human_lengths),
            "ttest": None,
            "flag": None,
        }
        if len(ai_lengths) >= 2 and len(human_lengths) >= 2:
            try:
                entry["ttest"] = welch_ttest(ai_lengths, human_lengths)
            except Exception as exc:  # degenerate variance
                entry["flag"] = f"t-test skipped: {exc}"
        else:
            entry["flag"] = "t-test skipped: fewer than 2 snippets in a group"
        stats.per_language[lang] = entry
    return stats


def run_grid(
    dataset: Dataset,
    train_fn: TrainFn,
    mode: str,
    n_per_class: int | None = None,
    ratio: float = 0.8,
    split_mode: str = "random_stratified",
    seed: int = 0,
    return_models: bool = False,
):
    """Train/test the experiment grid.

    ``monolingual`` trains one model per sub-dataset and tests it
    in-distribution; ``multilingual`` trains one model on the sampled
    multilingual set and reports metrics per language. Infeasible cells are
    recorded in ``grid.missing`` rather than aborting the grid.
    """
    if mode not in ("monolingual", MULTILINGUAL):
        raise EvaluationError(f"unknown grid mode {mode!r}")
    grid = ExperimentGrid(mode=mode)
    predict_fns: dict[tuple[str, str], Callable] = {}
    test_sets: dict[tuple[str, str], tuple[SnippetRecord, ...]] = {}

    if mode == "monolingual":
        subdatasets = list(iter_subdatasets(dataset))
        if n_per_class is None:
            n_per_class = min(
                min(sum(1 for r in sd.records if r.target == t) for t in (HUMAN, AI))
                for sd in subdatasets
            )
            if n_per_class < 1:
                raise EvaluationError(
                    "cannot derive a per-class threshold: a sub-dataset has an empty class"
                )
        for sd in subdatasets:
            cell = (sd.id.dst, sd.id.src)
            try:
                balanced = undersample_subdataset(sd, n_per_class, seed)
                split = split_train_test(
                    Dataset(records=balanced.records), ratio, split_mode, seed
                )
                predict_fn = train_fn(split.train, seed)
                metrics = compute_metrics(
                    predict_fn(split.test), [r.target for r in split.test]
                )
            except (SamplingError, EvaluationError) as exc:
                log.warning("cell %s skipped: %s", cell, exc)
                grid.missing[cell] = str(exc)
                continue
            grid.cells[cell] = metrics
            predict_fns[cell] = predict_fn
            test_sets[cell] = split.test
    else:
        if n_per_class is None:
            raise EvaluationError("multilingual mode needs n_per_class")
        plan = SamplePlan(per_class_count=n_per_class, seed=seed)
        sampled = sample_multilingual(dataset, plan)
        split = split_train_test(sampled, ratio, split_mode, seed)
        predict_fn = train_fn(split.train, seed)
        for lang in sorted(sampled.languages):
            test_records = tuple(r for r in split.test if r.language_name == lang)
            if not test_records:
                grid.missing[(lang, MULTILINGUAL)] = "no test records for language"
                continue
            metrics = compute_metrics(
                predict_fn(test_records), [r.target for r in test_records]
            )
            grid.cells[(lang, MULTILINGUAL)] = metrics
            test_sets[(lang, MULTILINGUAL)] = test_records
        predict_fns[("*", MULTILINGUAL)] = predict_fn

    if return_models:
        return grid, predict_fns, test_sets
    return grid


def provenance_shift(
    grid: ExperimentGrid,
    predict_fns: dict[tuple[str, str], Callable],
    test_sets: dict[tuple[str, str], tuple[SnippetRecord, ...]],
) -> dict:
    """Measure accuracy degradation when a model meets other provenances.

    Picks the best provenance by its marginal mean, then evaluates each
    destination's best-provenance model on every other provenance's test
    set. The aggregate gap is Welch-tested: difference reported as
    in-distribution minus shifted.
    """
    if grid.mode != "monolingual":
        raise EvaluationError("provenance shift needs a monolingual grid")
    marginals = grid.provenance_marginals()
    if not marginals:
        raise EvaluationError("grid has no cells")
    ranked = sorted(marginals.items(), key=lambda kv: (-kv[1][0], kv[0]))
    best_src = ranked[0][0]

    per_language: dict[str, dict] = {}
    in_dist_values: list[float] = []
    shifted_values: list[float] = []
    for dst in grid.languages:
        model_src = best_src
        if dst == best_src:
            alternatives = [src for src, _ in ranked if src != dst]
            if not alternatives:
                continue
            model_src = alternatives[0]
        cell = (dst, model_src)
        if cell not in grid.cells or cell not in predict_fns:
            continue
        in_dist = grid.cells[cell].accuracy
        predict_fn = predict_fns[cell]
        shifted: list[float] = []
        for (other_dst, other_src), records in sorted(test_sets.items()):
            if other_dst != dst or other_src == model_src:
                continue
            metrics = compute_metrics(predict_fn(records), [r.target for r in records])
            shifted.append(metrics.accuracy)
        if not shifted:
            continue
        shifted_mean = float(np.mean(shifted))
        per_language[dst] = {
            "model_src": model_src,
            "in_distribution": in_dist,
            "shifted_mean": shifted_mean,
            "gap": shifted_mean - in_dist,
        }
        in_dist_values.append(in_dist)
        shifted_values.extend(shifted)

    ttest: TTestResult | None = None
    if len(in_dist_values) >= 2 and len(shifted_values) >= 2:
        try:
            ttest = welch_ttest(shifted_values, in_dist_values)
        except Exception as exc:
            log.warning("provenance-shift t-test skipped: %s", exc)
    mean_gap = (
        float(np.mean([e["gap"] for e in per_language.values()])) if per_language else 0.0
    )
    return {
        "best_provenance": best_src,
        "per_language": per_language,
        "aggregate": {"mean_gap": mean_gap, "ttest": ttest},
    }


def external_dataset_eval(checkpoint, external: Dataset) -> Metrics:
    """Score a trained checkpoint on an external labeled dataset, no fine-tuning."""
    from .classifier import predict_records

    if not external.records:
        raise EvaluationError("external dataset is empty")
    predictions = predict_records(checkpoint, external.records)
    return compute_metrics(predictions, [r.target for r in external.records])
