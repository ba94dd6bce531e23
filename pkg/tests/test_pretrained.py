"""Surface checks for the optional pretrained-encoder variant.

Fine-tuning a real checkpoint is the operational path (see the README
checklist); these tests only pin the adapter's contract.
"""

from __future__ import annotations

import pytest

from codestylo import pretrained
from codestylo.classifier import TrainConfig, TrainingError
from codestylo.encoder import EncoderConfig


def test_missing_pretrained_path_rejected():
    torch = pytest.importorskip("torch")
    enc = EncoderConfig(variant="pretrained_checkpoint", pretrained_path=None)
    with pytest.raises(TrainingError, match="pretrained_path"):
        pretrained.train_pretrained(
            [object()], [], enc, TrainConfig(lr_initial=1e-4, epochs=2, lr_decay_epoch=1)
        )


def test_empty_train_set_rejected():
    pytest.importorskip("torch")
    enc = EncoderConfig(variant="pretrained_checkpoint", pretrained_path="some/model")
    with pytest.raises(TrainingError, match="empty"):
        pretrained.train_pretrained([], [], enc, TrainConfig())


def test_head_matches_recipe():
    torch = pytest.importorskip("torch")
    head = pretrained._build_head(torch, hidden=8, head_dim=8, dropout=0.2)
    kinds = [type(m).__name__ for m in head]
    assert kinds == ["Linear", "ReLU", "Dropout", "Linear"]
    assert head[0].in_features == 8
    assert head[2].p == 0.2
    assert head[3].out_features == 2
