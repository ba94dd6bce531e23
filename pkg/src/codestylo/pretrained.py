"""Pretrained-encoder variant: fine-tune a Hugging Face code encoder.

Operational path only; torch and transformers are optional dependencies
(``pip install codestylo[pretrained]``). The head and recipe mirror the
scratch variant: classification head on the position-0 encoder output,
AdamW with decoupled weight decay, one-step learning-rate decay.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Sequence

from .classifier import LABELS, Prediction, TrainConfig, TrainingError
from .encoder import EncoderConfig
from .generation import clean_snippet
from .records import SnippetRecord

log = logging.getLogger(__name__)


def _import_torch():
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        raise TrainingError(
            "the pretrained_checkpoint variant needs torch and transformers"
            " (pip install codestylo[pretrained])"
        ) from exc
    return torch, AutoModel, AutoTokenizer


def _build_head(torch, hidden: int, head_dim: int, dropout: float):
    return torch.nn.Sequential(
        torch.nn.Linear(hidden, head_dim),
        torch.nn.ReLU(),
        torch.nn.Dropout(dropout),
        torch.nn.Linear(head_dim, 2),
    )


class PretrainedClassifier:
    """Encoder + classification head over the first output token."""

    def __init__(self, encoder, head, tokenizer, max_len: int, device: str = "cpu"):
        self.encoder = encoder
        self.head = head
        self.tokenizer = tokenizer
        self.max_len = max_len
        self.device = device

    def _encode(self, torch, codes: Sequence[str]):
        batch = self.tokenizer(
            list(codes), padding=True, truncation=True, max_length=self.max_len,
            return_tensors="pt",
        ).to(self.device)
        output = self.encoder(**batch)
        return output.last_hidden_state[:, 0, :]

    def logits(self, torch, codes: Sequence[str]):
        return self.head(self._encode(torch, codes))

    def predict(self, code: str) -> Prediction:
        torch, _, _ = _import_torch()
        self.encoder.eval()
        self.head.eval()
        with torch.no_grad():
            logits = self.logits(torch, [clean_snippet(code)])[0]
            probs = torch.softmax(logits, dim=-1)
        label = LABELS[int(torch.argmax(logits))]
        return Prediction(
            label=label, prob_ai=float(probs[1]),
            logits=(float(logits[0]), float(logits[1])),
        )

    def save(self, path: str | Path) -> Path:
        torch, _, _ = _import_torch()
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        self.encoder.save_pretrained(path / "encoder")
        self.tokenizer.save_pretrained(path / "encoder")
        torch.save(self.head.state_dict(), path / "head.pt")
        (path / "config.json").write_text(
            json.dumps({"max_len": self.max_len}, sort_keys=True), encoding="utf-8"
        )
        return path


def train_pretrained(
    train_set: Sequence[SnippetRecord],
    val_set: Sequence[SnippetRecord],
    enc: EncoderConfig,
    cfg: TrainConfig,
    device: str = "cpu",
):
    """Fine-tune the configured pretrained encoder on human/ai records."""
    torch, AutoModel, AutoTokenizer = _import_torch()
    if not train_set:
        raise TrainingError("training set is empty")
    if not enc.pretrained_path:
        raise TrainingError("encoder.pretrained_path is not configured")

    tokenizer = AutoTokenizer.from_pretrained(enc.pretrained_path)
    model = AutoModel.from_pretrained(enc.pretrained_path, trust_remote_code=False)
    encoder = model.encoder if hasattr(model, "encoder") else model
    encoder.to(device)
    hidden = encoder.config.hidden_size
    head_dim = enc.head_dim if enc.head_dim is not None else hidden
    head = _build_head(torch, hidden, head_dim, enc.dropout_rate).to(device)

    classifier = PretrainedClassifier(encoder, head, tokenizer, enc.max_len, device)
    optimizer = torch.optim.AdamW(
        list(encoder.parameters()) + list(head.parameters()),
        lr=cfg.lr_initial, weight_decay=cfg.weight_decay,
    )
    loss_fn = torch.nn.CrossEntropyLoss()
    codes = [clean_snippet(r.code) for r in train_set]
    labels = torch.tensor([LABELS.index(r.target) for r in train_set], device=device)

    generator = torch.Generator().manual_seed(cfg.seed)
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_at_epoch(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        encoder.train()
        head.train()
        order = torch.randperm(len(codes), generator=generator).tolist()
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            optimizer.zero_grad()
            logits = classifier.logits(torch, [codes[i] for i in batch])
            loss = loss_fn(logits, labels[batch])
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss)
        log.info("epoch %d: lr=%g loss=%.4f", epoch, lr, epoch_loss)

    return classifier
