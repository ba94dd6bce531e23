"""Human/AI code classification: training loop, inference, checkpoints.

The trainable-from-scratch variant is pure numpy (encoder module). Training
follows a fixed recipe: AdamW with decoupled weight decay, a piecewise-
constant learning-rate schedule that decays once by a fixed factor at a
configured epoch boundary, and per-epoch loss / validation-accuracy logging.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoder import AdamW, EncoderConfig, forward, init_params, loss_and_grads
from .generation import clean_snippet
from .records import AI, HUMAN, SnippetRecord
from .sampling import make_rng
from .tokenizer import CodeTokenizer, TokenSequence, pad_batch

log = logging.getLogger(__name__)

LABELS = (HUMAN, AI)


class TrainingError(RuntimeError):
    pass


class CheckpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adamw"
    weight_decay: float = 0.01
    lr_initial: float = 2e-5
    epochs: int = 15
    lr_decay_epoch: int = 10
    lr_decay_factor: float = 0.1
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.optimizer != "adamw":
            raise TrainingError(f"unsupported optimizer {self.optimizer!r}")
        if not (0 < self.lr_decay_epoch < self.epochs):
            raise TrainingError("lr_decay_epoch must fall inside (0, epochs)")
        for name in ("weight_decay", "lr_initial", "lr_decay_factor"):
            if getattr(self, name) <= 0:
                raise TrainingError(f"{name} must be positive")

    def lr_at_epoch(self, epoch: int) -> float:
        """Piecewise-constant schedule; epochs are 1-based."""
        if epoch > self.lr_decay_epoch:
            return self.lr_initial * self.lr_decay_factor
        return self.lr_initial


@dataclass(frozen=True)
class Prediction:
    label: str
    prob_ai: float
    logits: tuple[float, float]


@dataclass
class ModelCheckpoint:
    """Encoder + head weights, tokenizer state, and the full training config."""

    params: dict[str, np.ndarray]
    encoder_config: EncoderConfig
    train_config: TrainConfig
    tokenizer: CodeTokenizer
    epoch_log: list[dict] = field(default_factory=list)
    lr_log: list[float] = field(default_factory=list)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        np.savez(path / "weights.npz", **self.params)
        (path / "config.json").write_text(
            json.dumps(
                {
                    "labels": list(LABELS),
                    "encoder": asdict(self.encoder_config),
                    "train": asdict(self.train_config),
                },
                indent=2,
                sort_keys=True,
            ),
            encoding="utf-8",
        )
        (path / "tokenizer.json").write_text(
            json.dumps(self.tokenizer.to_dict(), sort_keys=True), encoding="utf-8"
        )
        (path / "history.json").write_text(
            json.dumps({"epochs": self.epoch_log, "lr_per_step": self.lr_log}, sort_keys=True),
            encoding="utf-8",
        )
        hashes = {
            name: hashlib.sha256((path / name).read_bytes()).hexdigest()
            for name in ("weights.npz", "config.json", "tokenizer.json", "history.json")
        }
        manifest = {
            "format_version": 1,
            "hashes": hashes,
            "tokenizer_sha256": self.tokenizer.content_hash(),
        }
        (path / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        return path

    @classmethod
    def load(cls, path: str | Path) -> "ModelCheckpoint":
        path = Path(path)
        try:
            manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise CheckpointError(f"{path} is not a checkpoint directory") from exc
        for name, expected in manifest["hashes"].items():
            actual = hashlib.sha256((path / name).read_bytes()).hexdigest()
            if actual != expected:
                raise CheckpointError(f"checkpoint file {name} hash mismatch")
        config = json.loads((path / "config.json").read_text(encoding="utf-8"))
        tokenizer = CodeTokenizer.from_dict(
            json.loads((path / "tokenizer.json").read_text(encoding="utf-8"))
        )
        if tokenizer.content_hash() != manifest["tokenizer_sha256"]:
            raise CheckpointError("tokenizer hash differs from manifest")
        with np.load(path / "weights.npz") as payload:
            params = {k: payload[k] for k in payload.files}
        history = json.loads((path / "history.json").read_text(encoding="utf-8"))
        return cls(
            params=params,
            encoder_config=EncoderConfig(**config["encoder"]),
            train_config=TrainConfig(**config["train"]),
            tokenizer=tokenizer,
            epoch_log=history["epochs"],
            lr_log=history["lr_per_step"],
        )


def _label_array(records: Sequence[SnippetRecord]) -> np.ndarray:
    return np.array([LABELS.index(r.target) for r in records], dtype=np.int64)


def _prediction_from_logits(logits: np.ndarray) -> Prediction:
    shifted = logits - logits.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    label = LABELS[int(np.argmax(logits))]
    return Prediction(label=label, prob_ai=float(probs[1]), logits=(float(logits[0]), float(logits[1])))


def encode_classify(
    checkpoint: ModelCheckpoint,
    tokens: TokenSequence,
    mode: str = "eval",
    encoder_output_hook=None,
) -> Prediction:
    """Classify one token sequence; only the position-0 vector feeds the head."""
    if mode not in ("train", "eval"):
        raise TrainingError(f"mode must be train or eval, got {mode!r}")
    ids = np.asarray([tokens.ids], dtype=np.int64)
    lengths = np.asarray([tokens.length], dtype=np.int64)
    rng = make_rng(checkpoint.train_config.seed, 0xDE) if mode == "train" else None
    logits, _ = forward(
        checkpoint.params, ids, lengths, checkpoint.encoder_config,
        train=(mode == "train"), dropout_rng=rng,
        encoder_output_hook=encoder_output_hook,
    )
    return _prediction_from_logits(logits[0])


def _evaluate_accuracy(
    params: dict, cfg: EncoderConfig, sequences: list[TokenSequence],
    labels: np.ndarray, batch_size: int,
) -> float:
    correct = 0
    for start in range(0, len(sequences), batch_size):
        chunk = sequences[start : start + batch_size]
        ids, lengths = pad_batch(chunk)
        logits, _ = forward(params, ids, lengths, cfg, train=False)
        correct += int(np.sum(np.argmax(logits, axis=1) == labels[start : start + len(chunk)]))
    return correct / len(sequences)


def train(
    train_set: Sequence[SnippetRecord],
    val_set: Sequence[SnippetRecord],
    enc: EncoderConfig,
    cfg: TrainConfig,
    tokenizer: CodeTokenizer | None = None,
) -> ModelCheckpoint:
    """Train the scratch classifier; returns the final-epoch checkpoint.

    The tokenizer vocabulary is built from the training codes unless one is
    supplied. Train/val must be disjoint; training aborts on non-finite loss.
    """
    if not train_set:
        raise TrainingError("training set is empty")
    if enc.variant != "small_scratch":
        raise TrainingError(
            "this trainer handles the small_scratch variant; use the pretrained"
            " module for pretrained checkpoints"
        )
    train_keys = {(r.set, r.task_name, r.target) for r in train_set}
    if any((r.set, r.task_name, r.target) in train_keys for r in val_set):
        raise TrainingError("train and validation sets overlap")

    if tokenizer is None:
        tokenizer = CodeTokenizer.build((r.code for r in train_set), enc.vocab_size)
    if len(tokenizer) > enc.vocab_size:
        raise TrainingError("tokenizer vocabulary exceeds encoder vocab_size")

    train_seqs = [tokenizer.tokenize(r.code, enc.max_len) for r in train_set]
    val_seqs = [tokenizer.tokenize(r.code, enc.max_len) for r in val_set]
    y_train = _label_array(train_set)
    y_val = _label_array(val_set)

    params = init_params(enc, cfg.seed)
    optimizer = AdamW(weight_decay=cfg.weight_decay)
    dropout_rng = make_rng(cfg.seed, 0xD0)
    epoch_log: list[dict] = []
    lr_log: list[float] = []

    n = len(train_seqs)
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_at_epoch(epoch)
        order = make_rng(cfg.seed, 0x0E, epoch).permutation(n)
        losses: list[float] = []
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            ids, lengths = pad_batch([train_seqs[i] for i in batch])
            loss, grads, _ = loss_and_grads(
                params, ids, lengths, y_train[batch], enc,
                train=True, dropout_rng=dropout_rng,
            )
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}, step {optimizer.t + 1}"
                )
            optimizer.step(params, grads, lr)
            lr_log.append(lr)
            losses.append(loss)
        val_acc = (
            _evaluate_accuracy(params, enc, val_seqs, y_val, cfg.batch_size)
            if val_seqs else None
        )
        entry = {"epoch": epoch, "lr": lr, "train_loss": float(np.mean(losses)), "val_accuracy": val_acc}
        epoch_log.append(entry)
        log.info("epoch %d: lr=%g loss=%.4f val_acc=%s", epoch, lr, entry["train_loss"], val_acc)

    return ModelCheckpoint(
        params=params,
        encoder_config=enc,
        train_config=cfg,
        tokenizer=tokenizer,
        epoch_log=epoch_log,
        lr_log=lr_log,
    )


def predict(checkpoint: ModelCheckpoint, code: str) -> Prediction:
    """Clean, tokenize, and classify one snippet (eval mode, deterministic)."""
    cleaned = clean_snippet(code)
    if not cleaned:
        raise TrainingError("cannot classify empty code")
    tokens = checkpoint.tokenizer.tokenize(cleaned, checkpoint.encoder_config.max_len)
    return encode_classify(checkpoint, tokens, mode="eval")


def predict_records(checkpoint: ModelCheckpoint, records: Sequence[SnippetRecord]) -> list[Prediction]:
    """Batched eval-mode predictions for dataset records."""
    cfg = checkpoint.encoder_config
    sequences = [
        checkpoint.tokenizer.tokenize(clean_snippet(r.code), cfg.max_len) for r in records
    ]
    out: list[Prediction] = []
    batch = checkpoint.train_config.batch_size
    for start in range(0, len(sequences), batch):
        chunk = sequences[start : start + batch]
        ids, lengths = pad_batch(chunk)
        logits, _ = forward(checkpoint.params, ids, lengths, cfg, train=False)
        out.extend(_prediction_from_logits(row) for row in logits)
    return out
