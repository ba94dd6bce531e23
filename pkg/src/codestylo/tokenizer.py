"""Lexical code tokenizer with a corpus-built vocabulary.

Splits source into identifier / number / punctuation tokens plus explicit
newline and indentation markers, so layout style survives tokenization.
Every sequence starts with the classification token.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

PAD, BOS, UNK = "<pad>", "<s>", "<unk>"
SPECIALS = (PAD, BOS, UNK)
PAD_ID, BOS_ID, UNK_ID = 0, 1, 2

_TOKEN_RE = re.compile(r"\n|[ \t]{2,}|[A-Za-z_]\w*|\d[\w.]*|[^\sA-Za-z0-9_]")


class TokenizerError(ValueError):
    pass


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    length: int
    truncated: bool


def split_code(code: str) -> list[str]:
    out = []
    for tok in _TOKEN_RE.findall(code):
        if tok == "\n":
            out.append("<nl>")
        elif tok[0] in " \t":
            out.append("<ws>")
        else:
            out.append(tok)
    return out


class CodeTokenizer:
    def __init__(self, vocab: dict[str, int]):
        for i, special in enumerate(SPECIALS):
            if vocab.get(special) != i:
                raise TokenizerError(f"vocab must map {special!r} to id {i}")
        self.vocab = vocab

    @classmethod
    def build(cls, texts: Iterable[str], vocab_size: int = 4096) -> "CodeTokenizer":
        """Build a vocabulary from the most frequent tokens of the given texts."""
        if vocab_size <= len(SPECIALS):
            raise TokenizerError(f"vocab_size must exceed {len(SPECIALS)}")
        counts: dict[str, int] = {}
        for text in texts:
            for tok in split_code(text):
                counts[tok] = counts.get(tok, 0) + 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        vocab = {special: i for i, special in enumerate(SPECIALS)}
        for tok, _ in ranked[: vocab_size - len(SPECIALS)]:
            vocab[tok] = len(vocab)
        return cls(vocab)

    def __len__(self) -> int:
        return len(self.vocab)

    def tokenize(self, code: str, max_len: int) -> TokenSequence:
        """Encode code as [<s>, tokens...], truncating from the tail."""
        if not code.strip():
            raise TokenizerError("cannot tokenize empty code")
        ids = [BOS_ID] + [self.vocab.get(tok, UNK_ID) for tok in split_code(code)]
        truncated = len(ids) > max_len
        if truncated:
            ids = ids[:max_len]
        return TokenSequence(ids=tuple(ids), length=len(ids), truncated=truncated)

    def to_dict(self) -> dict:
        return {"vocab": self.vocab, "token_pattern": _TOKEN_RE.pattern}

    @classmethod
    def from_dict(cls, d: dict) -> "CodeTokenizer":
        return cls({k: int(v) for k, v in d["vocab"].items()})

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def pad_batch(sequences: Sequence[TokenSequence]):
    """Stack sequences into (ids, lengths) arrays padded with PAD_ID."""
    import numpy as np

    max_len = max(s.length for s in sequences)
    ids = np.full((len(sequences), max_len), PAD_ID, dtype=np.int64)
    lengths = np.empty(len(sequences), dtype=np.int64)
    for i, seq in enumerate(sequences):
        ids[i, : seq.length] = seq.ids
        lengths[i] = seq.length
    return ids, lengths
