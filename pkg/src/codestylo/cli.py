"""Command-line pipeline: build-dataset, sample, train, evaluate, detect, stats, report.

Exit codes: 0 success, 1 validation error (config, schema, missing files),
2 runtime failure. Every output directory gets a replayable manifest with
the config hash, seeds, and input hashes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .baselines import BaselineError
from .classifier import (
    CheckpointError, ModelCheckpoint, TrainingError, predict, predict_records, train,
)
from .clients import FakeCompletionClient, HttpCompletionClient
from .config import ConfigError, RunConfig
from .corpus import (
    CorpusError, all_pairs, filter_languages, load_aliases, load_corpus, load_ranking,
)
from .evaluation import (
    EvaluationError, length_stats, provenance_shift, run_grid,
)
from .generation import (
    Dataset, GenerationError, GenerationSettings, ResponseCache, assemble_dataset,
    build_prompt, build_subdataset, iter_subdatasets, translate,
)
from .records import AI, HUMAN, RecordFormatError, read_snippet_records, write_records
from .report import (
    render_grid_table, render_hypothesis_table, render_length_table,
    read_grid_records, write_grid_records, plot_provenance_shift,
)
from .sampling import (
    SamplePlan, SamplingError, sample_multilingual, split_train_test,
    undersample_subdataset, write_sample_manifest, write_split_manifest,
)
from .tokenizer import TokenizerError

log = logging.getLogger(__name__)

VALIDATION_ERRORS = (
    ConfigError, CorpusError, RecordFormatError, CheckpointError, TokenizerError,
    FileNotFoundError,
)
RUNTIME_ERRORS = (
    GenerationError, TrainingError, SamplingError, EvaluationError, BaselineError,
)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: RunConfig,
                    inputs: dict[str, Path], outputs: list[Path],
                    filename: str = "manifest.json") -> None:
    manifest = {
        "command": command,
        "config_sha256": config.config_hash(),
        "config": config.to_canonical_dict(),
        "seeds": {
            "sample": config.sample.seed,
            "split": config.split.seed,
            "train": config.train.seed,
        },
        "inputs": {name: _sha256_file(p) for name, p in sorted(inputs.items())},
        "outputs": {p.name: _sha256_file(p) for p in sorted(outputs)},
    }
    (out_dir / filename).write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )


def _make_client(config: RunConfig):
    if config.completion.endpoint:
        return HttpCompletionClient(config.completion.endpoint)
    log.info("no completion endpoint configured; using the offline fake client")
    return FakeCompletionClient()


def _read_dataset(path: Path) -> Dataset:
    return Dataset(records=tuple(read_snippet_records(path)))


def _resolve_per_class(config: RunConfig, dataset: Dataset, labels: list[str] | None = None) -> int:
    value = config.sample.per_class_count
    if value != "auto":
        return int(value)
    counts = []
    for sd in iter_subdatasets(dataset):
        if labels is not None and sd.id.label not in labels:
            continue
        counts.append(min(
            sum(1 for r in sd.records if r.target == HUMAN),
            sum(1 for r in sd.records if r.target == AI),
        ))
    if not counts:
        raise SamplingError("no sub-datasets found to derive the per-class threshold")
    return min(counts)


def _prewarm_cache(corpus, pairs, client, cache, settings, workers: int) -> None:
    # Issue translation requests in parallel; results land in the cache so the
    # sequential assembly below sees only cache hits.
    jobs = []
    for pair in pairs:
        for task in sorted(pair.task_ids):
            src_snip = corpus.solution(task, pair.src)
            try:
                prompt = build_prompt(
                    src_snip, pair.src, pair.dst, settings.limits,
                    token_counter=settings.token_counter, template=settings.template,
                )
            except GenerationError:
                continue
            jobs.append(prompt)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(
            lambda p: translate(client, p, settings.limits, cache=cache,
                                retries=settings.retries, backoff=settings.backoff),
            jobs,
        ))


def cmd_build_dataset(args: argparse.Namespace) -> int:
    config = _load_config(args)
    config.validate()
    aliases = load_aliases(config.alias_file) if config.alias_file else load_aliases()
    ranking = load_ranking(config.ranking_file, aliases)
    corpus = load_corpus(config.corpus, aliases)
    corpus = filter_languages(corpus, ranking, config.top_k)
    pairs = all_pairs(corpus)
    print(f"languages: {sorted(corpus.languages)}; ordered pairs: {len(pairs)}")

    client = _make_client(config)
    cache = ResponseCache(config.cache_dir)
    settings = GenerationSettings(
        limits=config.token_limits,
        retries=config.completion.retries,
        backoff=config.completion.backoff,
    )
    workers = args.workers or config.completion.workers
    if workers > 1:
        _prewarm_cache(corpus, pairs, client, cache, settings, workers)

    out_dir = Path(args.out) if args.out else config.datasets_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    subdatasets = []
    for pair in pairs:
        sd = build_subdataset(corpus, pair, client, cache=cache, settings=settings)
        subdatasets.append(sd)
        sd_path = out_dir / f"{sd.id.label}.jsonl"
        write_records(sd_path, sd.records)
        outputs.append(sd_path)
    dataset = assemble_dataset(subdatasets)
    ds_path = out_dir / "dataset.jsonl"
    write_records(ds_path, dataset.records)
    outputs.append(ds_path)

    report_path = out_dir / "build_report.json"
    report_path.write_text(
        json.dumps(dataset.summary(), indent=2, sort_keys=True), encoding="utf-8"
    )
    outputs.append(report_path)
    _write_manifest(out_dir, "build-dataset", config,
                    {"corpus": config.corpus}, outputs)
    print(f"dataset: {len(dataset.records)} records across {len(subdatasets)} sub-datasets -> {ds_path}")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    config = _load_config(args)
    config.validate(require_corpus=False)
    ds_path = config.datasets_dir / "dataset.jsonl"
    dataset = _read_dataset(ds_path)
    n = _resolve_per_class(config, dataset)
    plan = SamplePlan(per_class_count=n, seed=config.sample.seed)
    sampled = sample_multilingual(dataset, plan)
    split = split_train_test(sampled, config.split.ratio, config.split.mode, config.split.seed)

    out_dir = Path(args.out) if args.out else config.datasets_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    sample_path = out_dir / "multilingual.jsonl"
    write_records(sample_path, sampled.records)
    manifest_path = out_dir / "multilingual_manifest.jsonl"
    write_sample_manifest(sampled, manifest_path)
    split_path = out_dir / "multilingual_split.jsonl"
    write_split_manifest(split, split_path)
    _write_manifest(out_dir, "sample", config, {"dataset": ds_path},
                    [sample_path, manifest_path, split_path])
    print(f"multilingual sample: {len(sampled.records)} records"
          f" ({n} per class per language) -> {sample_path}")
    return 0


def _train_on_split(config: RunConfig, train_records, val_records) -> ModelCheckpoint:
    if config.encoder.variant == "pretrained_checkpoint":
        from . import pretrained

        return pretrained.train_pretrained(train_records, val_records,
                                           config.encoder, config.train)
    return train(train_records, val_records, config.encoder, config.train)


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    config.validate(require_corpus=False)
    dataset = _read_dataset(config.datasets_dir / "dataset.jsonl")
    scope = args.scope

    if scope == "multilingual":
        n = _resolve_per_class(config, dataset)
        sampled = sample_multilingual(
            dataset, SamplePlan(per_class_count=n, seed=config.sample.seed)
        )
        split = split_train_test(sampled, config.split.ratio, config.split.mode,
                                 config.split.seed)
        label = "multilingual"
    else:
        matches = [sd for sd in iter_subdatasets(dataset) if sd.id.label == scope]
        if not matches:
            raise ConfigError(
                f"scope {scope!r} is neither 'multilingual' nor a sub-dataset label"
            )
        sd = matches[0]
        n = _resolve_per_class(config, dataset, labels=[scope])
        balanced = undersample_subdataset(sd, n, config.sample.seed)
        split = split_train_test(Dataset(records=balanced.records),
                                 config.split.ratio, config.split.mode, config.split.seed)
        label = scope

    checkpoint = _train_on_split(config, split.train, ())
    out_dir = Path(args.out) if args.out else config.checkpoints_dir / label
    checkpoint.save(out_dir)
    split_path = out_dir / "split_manifest.jsonl"
    write_split_manifest(split, split_path)
    test_metrics = None
    if split.test:
        from .metrics import compute_metrics

        if isinstance(checkpoint, ModelCheckpoint):
            preds = predict_records(checkpoint, split.test)
        else:
            preds = [checkpoint.predict(r.code) for r in split.test]
        m = compute_metrics(preds, [r.target for r in split.test])
        test_metrics = {"accuracy": m.accuracy, "f1_ai": m.f1_ai,
                        "f1_macro": m.f1_macro, "auc": m.auc, "n": m.n}
        (out_dir / "test_metrics.json").write_text(
            json.dumps(test_metrics, indent=2, sort_keys=True), encoding="utf-8"
        )
    _write_manifest(out_dir, f"train-{label}", config,
                    {"dataset": config.datasets_dir / "dataset.jsonl"},
                    [split_path], filename="run_manifest.json")
    print(f"checkpoint {label} -> {out_dir}")
    if test_metrics:
        print(f"test accuracy: {test_metrics['accuracy']:.3f} (n={test_metrics['n']})")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    config.validate(require_corpus=False)
    dataset = _read_dataset(config.datasets_dir / "dataset.jsonl")
    n = _resolve_per_class(config, dataset)

    def train_fn(train_records, seed):
        tcfg = replace(config.train, seed=seed)
        ckpt = _train_on_split(replace(config, train=tcfg), train_records, ())
        return lambda records: predict_records(ckpt, records)

    out_dir = Path(args.out) if args.out else config.reports_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []

    grid, predict_fns, test_sets = run_grid(
        dataset, train_fn, args.scope, n_per_class=n,
        ratio=config.split.ratio, split_mode=config.split.mode,
        seed=config.split.seed, return_models=True,
    )
    grid_path = out_dir / f"grid_{args.scope}.jsonl"
    write_grid_records(grid, grid_path)
    outputs.append(grid_path)
    table_path = out_dir / f"grid_{args.scope}.txt"
    table_path.write_text(render_grid_table(grid) + "\n", encoding="utf-8")
    outputs.append(table_path)
    print(render_grid_table(grid))

    if args.scope == "monolingual":
        hyp_path = out_dir / "hypothesis_tests.txt"
        hyp_path.write_text(render_hypothesis_table(grid) + "\n", encoding="utf-8")
        outputs.append(hyp_path)
        shift = provenance_shift(grid, predict_fns, test_sets)
        shift_path = out_dir / "provenance_shift.json"
        shift_payload = {
            "best_provenance": shift["best_provenance"],
            "per_language": shift["per_language"],
            "aggregate": {
                "mean_gap": shift["aggregate"]["mean_gap"],
                "ttest": asdict(shift["aggregate"]["ttest"]) if shift["aggregate"]["ttest"] else None,
            },
        }
        shift_path.write_text(json.dumps(shift_payload, indent=2, sort_keys=True),
                              encoding="utf-8")
        outputs.append(shift_path)
        if args.plot:
            outputs.append(plot_provenance_shift(shift, out_dir / "provenance_shift.png"))

    _write_manifest(out_dir, f"evaluate-{args.scope}", config,
                    {"dataset": config.datasets_dir / "dataset.jsonl"}, outputs)
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    checkpoint = ModelCheckpoint.load(args.checkpoint)
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if args.raw:
            text = Path(args.input).read_text(encoding="utf-8") if args.input else sys.stdin.read()
            snippets = [text] if text.strip() else []
        else:
            lines = (
                Path(args.input).read_text(encoding="utf-8").splitlines()
                if args.input else sys.stdin.read().splitlines()
            )
            snippets = []
            for lineno, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    snippets.append(obj["code"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise RecordFormatError(
                        f"input line {lineno}: expected an object with a 'code' field ({exc})"
                    ) from exc
        for code in snippets:
            verdict = predict(checkpoint, code)
            out_fh.write(json.dumps(
                {"label": verdict.label, "prob_ai": verdict.prob_ai}, ensure_ascii=False
            ))
            out_fh.write("\n")
    finally:
        if args.out:
            out_fh.close()
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = _read_dataset(Path(args.dataset))
    stats = length_stats(dataset)
    table = render_length_table(stats)
    print(table)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "length_stats.txt").write_text(table + "\n", encoding="utf-8")
        rows_path = out_dir / "length_stats.jsonl"
        with rows_path.open("w", encoding="utf-8", newline="\n") as fh:
            for lang, entry in sorted(stats.per_language.items()):
                row = {
                    "language": lang,
                    "all_mean": entry["all"][0], "all_std": entry["all"][1],
                    "ai": entry["ai"], "human": entry["human"],
                    "n_ai": entry["n_ai"], "n_human": entry["n_human"],
                    "ttest": asdict(entry["ttest"]) if entry["ttest"] else None,
                    "flag": entry["flag"],
                }
                fh.write(json.dumps(row, ensure_ascii=False))
                fh.write("\n")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    grid = read_grid_records(Path(args.grid))
    multi = read_grid_records(Path(args.multi_grid)) if args.multi_grid else None
    sections = [render_grid_table(grid)]
    if grid.mode == "monolingual":
        sections.append(render_hypothesis_table(grid, multi))
    if multi is not None:
        sections.append(render_grid_table(multi))
    text = "\n\n".join(sections)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(text + "\n", encoding="utf-8")
    return 0


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config.override_seed(args.seed)
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codestylo",
        description="Human-vs-AI code stylometry pipeline.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--config", help="JSON run-config file")
        p.add_argument("--out", help="output directory override")
        if seed:
            p.add_argument("--seed", type=int, help="override every configured seed")

    p = sub.add_parser("build-dataset", help="build the labeled dataset via translation")
    add_common(p)
    p.add_argument("--workers", type=int, help="parallel translation workers")
    p.set_defaults(handler=cmd_build_dataset)

    p = sub.add_parser("sample", help="draw the multilingual training sample")
    add_common(p)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("train", help="train one classifier")
    add_common(p)
    p.add_argument("--scope", required=True,
                   help="'multilingual' or a sub-dataset label like Java_from_Kotlin")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="run an experiment grid")
    add_common(p)
    p.add_argument("--scope", choices=["monolingual", "multilingual"], required=True)
    p.add_argument("--plot", action="store_true", help="emit provenance-shift plot (needs matplotlib)")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("detect", help="classify snippets with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", help="input file (default: stdin)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--raw", action="store_true",
                   help="treat the whole input as one snippet instead of JSONL records")
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("stats", help="dataset length statistics")
    p.add_argument("--dataset", required=True, help="dataset JSONL file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("report", help="render tables from stored grid records")
    p.add_argument("--grid", required=True, help="grid records JSONL")
    p.add_argument("--multi-grid", help="multilingual grid records JSONL")
    p.add_argument("--out", help="output directory")
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RUNTIME_ERRORS as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
