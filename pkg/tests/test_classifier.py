from __future__ import annotations

import numpy as np
import pytest

from codestylo.classifier import (
    CheckpointError, ModelCheckpoint, Prediction, TrainConfig, TrainingError,
    encode_classify, predict, predict_records, train,
)
from codestylo.encoder import EncoderConfig
from codestylo.records import AI, HUMAN
from codestylo.sampling import split_train_test

from conftest import make_planted_dataset

TINY_ENC = EncoderConfig(variant="small_scratch", layers=1, hidden_dim=32, heads=2,
                         max_len=64, vocab_size=256, dropout_rate=0.2)
FAST_TRAIN = TrainConfig(lr_initial=3e-4, epochs=3, lr_decay_epoch=2, batch_size=8, seed=0)


@pytest.fixture(scope="module")
def planted_checkpoint() -> ModelCheckpoint:
    ds = make_planted_dataset(40, seed=1)
    split = split_train_test(ds, 0.8, "random_stratified", 0)
    return train(split.train, split.test, TINY_ENC, FAST_TRAIN)


class TestTrainConfig:
    def test_schedule_paper_defaults(self):
        cfg = TrainConfig()
        assert cfg.weight_decay == 0.01
        assert cfg.lr_initial == 2e-5
        assert cfg.epochs == 15
        assert [cfg.lr_at_epoch(e) for e in range(1, 16)] == \
            [2e-5] * 10 + [pytest.approx(2e-6)] * 5

    def test_validation(self):
        with pytest.raises(TrainingError):
            TrainConfig(lr_decay_epoch=15, epochs=15)
        with pytest.raises(TrainingError):
            TrainConfig(optimizer="sgd")
        with pytest.raises(TrainingError):
            TrainConfig(lr_initial=0.0)


class TestTraining:
    def test_recorded_lr_matches_schedule(self, planted_checkpoint):
        cfg = planted_checkpoint.train_config
        n_batches = len(planted_checkpoint.lr_log) // cfg.epochs
        for step, lr in enumerate(planted_checkpoint.lr_log):
            epoch = step // n_batches + 1
            assert lr == cfg.lr_at_epoch(epoch)

    def test_epoch_log_contents(self, planted_checkpoint):
        log = planted_checkpoint.epoch_log
        assert len(log) == FAST_TRAIN.epochs
        assert all({"epoch", "lr", "train_loss", "val_accuracy"} <= set(e) for e in log)

    def test_empty_train_rejected(self):
        with pytest.raises(TrainingError, match="empty"):
            train([], [], TINY_ENC, FAST_TRAIN)

    def test_overlapping_val_rejected(self):
        ds = make_planted_dataset(4)
        with pytest.raises(TrainingError, match="overlap"):
            train(ds.records, ds.records[:1], TINY_ENC, FAST_TRAIN)

    def test_nonfinite_loss_aborts_with_diagnostic(self):
        # a learning rate large enough to overflow float64 in the forward pass
        ds = make_planted_dataset(10, seed=4)
        cfg = TrainConfig(lr_initial=1e80, epochs=2, lr_decay_epoch=1,
                          batch_size=4, seed=0)
        with np.errstate(all="ignore"), pytest.raises(TrainingError, match="non-finite loss"):
            train(ds.records, (), TINY_ENC, cfg)

    def test_determinism_same_seed_same_weights(self):
        ds = make_planted_dataset(8, seed=5)
        split = split_train_test(ds, 0.75, "random_stratified", 1)
        cfg = TrainConfig(lr_initial=1e-3, epochs=2, lr_decay_epoch=1, batch_size=4, seed=9)
        a = train(split.train, (), TINY_ENC, cfg)
        b = train(split.train, (), TINY_ENC, cfg)
        for key in a.params:
            assert np.array_equal(a.params[key], b.params[key])


class TestPredictions:
    def test_symmetric_logits_give_half(self, planted_checkpoint):
        pred = Prediction(label=HUMAN, prob_ai=0.5, logits=(0.0, 0.0))
        seq = planted_checkpoint.tokenizer.tokenize("x", 8)
        out = encode_classify(planted_checkpoint, seq)
        assert abs((np.exp(out.logits[1]) / (np.exp(out.logits[0]) + np.exp(out.logits[1]))) - out.prob_ai) < 1e-9
        assert pred.prob_ai == 0.5

    def test_extreme_logits(self):
        # softmax of (-10, 10) puts essentially all mass on ai
        logits = np.array([-10.0, 10.0])
        probs = np.exp(logits - logits.max())
        probs /= probs.sum()
        assert probs[1] > 0.9999

    def test_predict_is_deterministic(self, planted_checkpoint):
        code = "def solve():\n    return 1"
        assert predict(planted_checkpoint, code) == predict(planted_checkpoint, code)

    def test_predict_cleans_input(self, planted_checkpoint):
        code = "def solve():\n    return 1"
        padded = "\n\n   " + code + "  \n\t"
        assert predict(planted_checkpoint, padded) == predict(planted_checkpoint, code)

    def test_predict_rejects_empty(self, planted_checkpoint):
        with pytest.raises(TrainingError):
            predict(planted_checkpoint, "   \n")

    def test_probabilities_normalized(self, planted_checkpoint):
        ds = make_planted_dataset(6, seed=3)
        for p in predict_records(planted_checkpoint, ds.records):
            logits = np.array(p.logits)
            probs = np.exp(logits - logits.max())
            probs /= probs.sum()
            assert probs[0] + probs[1] == pytest.approx(1.0, abs=1e-6)
            assert p.prob_ai == pytest.approx(probs[1], abs=1e-9)

    def test_planted_signal_learned(self, planted_checkpoint):
        ds = make_planted_dataset(30, seed=77)
        preds = predict_records(planted_checkpoint, ds.records)
        correct = sum(p.label == r.target for p, r in zip(preds, ds.records))
        assert correct / len(ds.records) >= 0.9


class TestCheckpointIO:
    def test_roundtrip_identical_predictions(self, planted_checkpoint, tmp_path):
        planted_checkpoint.save(tmp_path / "ckpt")
        loaded = ModelCheckpoint.load(tmp_path / "ckpt")
        code = "value_0 = total_1 + 3"
        assert predict(loaded, code) == predict(planted_checkpoint, code)
        assert loaded.train_config == planted_checkpoint.train_config
        assert loaded.encoder_config == planted_checkpoint.encoder_config

    def test_tokenizer_hash_mismatch_detected(self, planted_checkpoint, tmp_path):
        path = planted_checkpoint.save(tmp_path / "ckpt")
        import json

        manifest = json.loads((path / "manifest.json").read_text())
        tok = json.loads((path / "tokenizer.json").read_text())
        tok["vocab"]["__planted__"] = len(tok["vocab"])
        blob = json.dumps(tok, sort_keys=True)
        (path / "tokenizer.json").write_text(blob, encoding="utf-8")
        import hashlib

        manifest["hashes"]["tokenizer.json"] = hashlib.sha256(blob.encode()).hexdigest()
        (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        with pytest.raises(CheckpointError, match="tokenizer hash"):
            ModelCheckpoint.load(path)

    def test_corrupted_weights_detected(self, planted_checkpoint, tmp_path):
        path = planted_checkpoint.save(tmp_path / "ckpt")
        (path / "weights.npz").write_bytes(b"corrupt")
        with pytest.raises(CheckpointError, match="hash mismatch"):
            ModelCheckpoint.load(path)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(CheckpointError):
            ModelCheckpoint.load(tmp_path / "nope")
