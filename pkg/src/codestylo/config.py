"""Run configuration: one self-describing JSON file drives every command.

Every pipeline constant (class threshold 470, token limits 1024/2048, the
80/20 split, the 15-epoch recipe) lives here with its default, so a replica
run needs no flags and an experiment only overrides what it changes.
Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .encoder import EncoderConfig
from .classifier import TrainConfig
from .generation import TokenLimits
from .sampling import RNG_ALGORITHM


class ConfigError(ValueError):
    pass


@dataclass
class CompletionSettings:
    endpoint: str | None = None
    workers: int = 4
    retries: int = 3
    backoff: float = 0.5


@dataclass
class SampleSettings:
    per_class_count: int | str = 470
    seed: int = 1


@dataclass
class SplitSettings:
    ratio: float = 0.8
    mode: str = "random_stratified"
    seed: int = 2


@dataclass
class RunConfig:
    corpus: Path = Path("corpus.jsonl")
    cache_dir: Path = Path("cache")
    datasets_dir: Path = Path("datasets")
    checkpoints_dir: Path = Path("checkpoints")
    reports_dir: Path = Path("reports")
    ranking_file: Path | None = None
    alias_file: Path | None = None
    top_k: int = 10
    rng: str = RNG_ALGORITHM
    completion: CompletionSettings = field(default_factory=CompletionSettings)
    token_limits: TokenLimits = field(default_factory=TokenLimits)
    sample: SampleSettings = field(default_factory=SampleSettings)
    split: SplitSettings = field(default_factory=SplitSettings)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "RunConfig":
        base_dir = base_dir or Path(".")

        def resolve(p: str | None) -> Path | None:
            if p is None:
                return None
            p = Path(p)
            return p if p.is_absolute() else base_dir / p

        known = {
            "paths", "ranking_file", "alias_file", "top_k", "rng", "completion",
            "token_limits", "sample", "split", "encoder", "train",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        paths = raw.get("paths", {})
        try:
            cfg = cls(
                corpus=resolve(paths.get("corpus", "corpus.jsonl")),
                cache_dir=resolve(paths.get("cache", "cache")),
                datasets_dir=resolve(paths.get("datasets", "datasets")),
                checkpoints_dir=resolve(paths.get("checkpoints", "checkpoints")),
                reports_dir=resolve(paths.get("reports", "reports")),
                ranking_file=resolve(raw.get("ranking_file")),
                alias_file=resolve(raw.get("alias_file")),
                top_k=int(raw.get("top_k", 10)),
                rng=raw.get("rng", RNG_ALGORITHM),
                completion=CompletionSettings(**raw.get("completion", {})),
                token_limits=TokenLimits(**raw.get("token_limits", {})),
                sample=SampleSettings(**raw.get("sample", {})),
                split=SplitSettings(**raw.get("split", {})),
                encoder=EncoderConfig(**raw.get("encoder", {})),
                train=TrainConfig(**raw.get("train", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        return cfg

    def validate(self, require_corpus: bool = True) -> None:
        if self.rng != RNG_ALGORITHM:
            raise ConfigError(
                f"unsupported rng {self.rng!r}; this build implements {RNG_ALGORITHM!r}"
            )
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if not 0.0 < self.split.ratio < 1.0:
            raise ConfigError("split.ratio must be in (0, 1)")
        if isinstance(self.sample.per_class_count, str) and self.sample.per_class_count != "auto":
            raise ConfigError("sample.per_class_count must be an integer or 'auto'")
        if require_corpus and not self.corpus.exists():
            raise ConfigError(f"corpus file not found: {self.corpus}")
        if self.ranking_file is not None and not self.ranking_file.exists():
            raise ConfigError(f"ranking file not found: {self.ranking_file}")
        if self.alias_file is not None and not self.alias_file.exists():
            raise ConfigError(f"alias file not found: {self.alias_file}")
        if self.encoder.variant == "pretrained_checkpoint" and not self.encoder.pretrained_path:
            raise ConfigError("pretrained_checkpoint variant needs encoder.pretrained_path")

    def to_canonical_dict(self) -> dict:
        d = {
            "paths": {
                "corpus": str(self.corpus),
                "cache": str(self.cache_dir),
                "datasets": str(self.datasets_dir),
                "checkpoints": str(self.checkpoints_dir),
                "reports": str(self.reports_dir),
            },
            "ranking_file": str(self.ranking_file) if self.ranking_file else None,
            "alias_file": str(self.alias_file) if self.alias_file else None,
            "top_k": self.top_k,
            "rng": self.rng,
            "completion": asdict(self.completion),
            "token_limits": asdict(self.token_limits),
            "sample": asdict(self.sample),
            "split": asdict(self.split),
            "encoder": asdict(self.encoder),
            "train": asdict(self.train),
        }
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def override_seed(self, seed: int) -> None:
        self.sample = SampleSettings(per_class_count=self.sample.per_class_count, seed=seed)
        self.split = SplitSettings(ratio=self.split.ratio, mode=self.split.mode, seed=seed)
        train = asdict(self.train)
        train["seed"] = seed
        self.train = TrainConfig(**train)
