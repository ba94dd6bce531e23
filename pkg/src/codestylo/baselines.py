"""Classical comparison classifiers: layout/lexical features into decision
trees or a random forest, and TF-IDF into gradient-boosted trees, evaluated
with stratified k-fold cross-validation.

The tree learners search splits through the kernels module, so they run on
the numba path by default and on pure numpy under ``CODESTYLO_NO_NUMBA=1``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .keywords import KEYWORDS
from .sampling import make_rng

CODE_TOKEN_RE = re.compile(r"[A-Za-z_]\w*|\d[\w.]*|\S")
_IDENTIFIER_RE = re.compile(r"[A-Za-z_]\w*\Z")
_COMMENT_PREFIXES = {"Python": ("#",), "Ruby": ("#",)}
_DEFAULT_COMMENT_PREFIXES = ("//", "/*")


class BaselineError(ValueError):
    pass


def code_tokens(code: str) -> list[str]:
    return CODE_TOKEN_RE.findall(code)


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray


def feature_names(lang: str) -> tuple[str, ...]:
    if lang not in KEYWORDS:
        raise BaselineError(f"no keyword list registered for language {lang!r}")
    base = (
        "line_count", "mean_line_length", "max_line_length",
        "indent_mean", "indent_max", "blank_line_ratio", "whitespace_ratio",
        "token_count", "mean_token_length", "identifier_count",
        "comment_line_ratio", "numeric_literal_ratio",
    )
    return base + tuple(f"kw_{kw}" for kw in KEYWORDS[lang])


def extract_features(code: str, lang: str) -> FeatureVector:
    """Deterministic layout + lexical features; dimension is fixed per language."""
    if lang not in KEYWORDS:
        raise BaselineError(f"no keyword list registered for language {lang!r}")
    keywords = KEYWORDS[lang]
    kw_index = {kw: i for i, kw in enumerate(keywords)}

    lines = code.splitlines() or [""]
    n_lines = len(lines)
    line_lengths = [len(ln) for ln in lines]
    indents = [len(ln) - len(ln.lstrip()) for ln in lines if ln.strip()]
    blank = sum(1 for ln in lines if not ln.strip())
    comment_prefixes = _COMMENT_PREFIXES.get(lang, _DEFAULT_COMMENT_PREFIXES)
    comment_lines = sum(
        1 for ln in lines if ln.lstrip().startswith(comment_prefixes)
    )
    n_chars = len(code)
    n_ws = sum(1 for ch in code if ch.isspace())

    tokens = code_tokens(code)
    n_tokens = len(tokens)
    kw_counts = np.zeros(len(keywords), dtype=np.float64)
    identifiers = 0
    numerics = 0
    for tok in tokens:
        if tok in kw_index:
            kw_counts[kw_index[tok]] += 1.0
        elif _IDENTIFIER_RE.match(tok):
            identifiers += 1
        if tok[0].isdigit():
            numerics += 1

    values = np.array(
        [
            float(n_lines),
            float(np.mean(line_lengths)) if line_lengths else 0.0,
            float(max(line_lengths)) if line_lengths else 0.0,
            float(np.mean(indents)) if indents else 0.0,
            float(max(indents)) if indents else 0.0,
            blank / n_lines,
            (n_ws / n_chars) if n_chars else 0.0,
            float(n_tokens),
            (sum(len(t) for t in tokens) / n_tokens) if n_tokens else 0.0,
            float(identifiers),
            comment_lines / n_lines,
            (numerics / n_tokens) if n_tokens else 0.0,
        ],
        dtype=np.float64,
    )
    kw_freq = kw_counts / n_tokens if n_tokens else kw_counts
    return FeatureVector(names=feature_names(lang), values=np.concatenate([values, kw_freq]))


def features_matrix(codes: Sequence[str], lang: str) -> np.ndarray:
    return np.stack([extract_features(code, lang).values for code in codes])


# ---------------------------------------------------------------------------
# Tree learners (array-encoded binary trees over the split kernels)
# ---------------------------------------------------------------------------

_LEAF = -1


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add_node(self) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.float64)
        for i in range(X.shape[0]):
            node = 0
            while self.feature[node] != _LEAF:
                if X[i, self.feature[node]] <= self.threshold[node]:
                    node = self.left[node]
                else:
                    node = self.right[node]
            out[i] = self.value[node]
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "_Tree":
        tree = cls()
        tree.feature = [int(v) for v in d["feature"]]
        tree.threshold = [float(v) for v in d["threshold"]]
        tree.left = [int(v) for v in d["left"]]
        tree.right = [int(v) for v in d["right"]]
        tree.value = [float(v) for v in d["value"]]
        return tree


def _grow_classification_tree(
    X: np.ndarray,
    sort_idx: np.ndarray,
    y: np.ndarray,
    mask: np.ndarray,
    *,
    criterion: str,
    max_depth: int,
    min_leaf: int,
    max_features: int | None,
    rng: np.random.Generator | None,
) -> _Tree:
    use_entropy = criterion == "entropy"
    n_features = X.shape[1]
    tree = _Tree()
    root = tree.add_node()
    stack: list[tuple[int, np.ndarray, int]] = [(root, mask, 0)]
    while stack:
        node, node_mask, depth = stack.pop()
        n = int(node_mask.sum())
        n1 = int(y[node_mask].sum())
        tree.value[node] = n1 / n if n else 0.0
        if depth >= max_depth or n1 == 0 or n1 == n or n < 2 * min_leaf:
            continue
        if max_features is not None and rng is not None and max_features < n_features:
            feats = np.sort(rng.choice(n_features, size=max_features, replace=False))
        else:
            feats = np.arange(n_features, dtype=np.int64)
        feat, thr, gain = kernels.best_split_classification(
            X, sort_idx, node_mask, feats.astype(np.int64), y, min_leaf, use_entropy
        )
        # zero-gain splits are accepted on impure nodes (XOR-style interactions
        # only pay off deeper); children strictly shrink, so growth terminates
        if feat < 0 or gain < 0.0:
            continue
        left_mask = node_mask & (X[:, feat] <= thr)
        right_mask = node_mask & ~left_mask
        tree.feature[node] = int(feat)
        tree.threshold[node] = float(thr)
        left = tree.add_node()
        right = tree.add_node()
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, right_mask, depth + 1))
        stack.append((left, left_mask, depth + 1))
    return tree


def _grow_gradient_tree(
    X: np.ndarray,
    sort_idx: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    *,
    max_depth: int,
    min_leaf: int,
    reg_lambda: float,
) -> _Tree:
    tree = _Tree()
    root = tree.add_node()
    all_feats = np.arange(X.shape[1], dtype=np.int64)
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.ones(X.shape[0], dtype=bool), 0)]
    while stack:
        node, node_mask, depth = stack.pop()
        gl = float(np.sum(g[node_mask]))
        hl = float(np.sum(h[node_mask]))
        tree.value[node] = -gl / (hl + reg_lambda)
        if depth >= max_depth:
            continue
        feat, thr, gain = kernels.best_split_gradient(
            X, sort_idx, node_mask, all_feats, g, h, min_leaf, reg_lambda
        )
        if feat < 0 or gain <= 0.0:
            continue
        left_mask = node_mask & (X[:, feat] <= thr)
        right_mask = node_mask & ~left_mask
        tree.feature[node] = int(feat)
        tree.threshold[node] = float(thr)
        left = tree.add_node()
        right = tree.add_node()
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, right_mask, depth + 1))
        stack.append((left, left_mask, depth + 1))
    return tree


def _presort(X: np.ndarray) -> np.ndarray:
    return np.argsort(X, axis=0, kind="stable").astype(np.int64)


class DecisionTreeModel:
    """Entropy-split binary decision tree (C4.5-style, unpruned)."""

    kind = "c45_style_tree"

    def __init__(self, max_depth: int = 25, min_leaf: int = 1, criterion: str = "entropy"):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.criterion = criterion
        self.tree: _Tree | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTreeModel":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.tree = _grow_classification_tree(
            X, _presort(X), y, np.ones(X.shape[0], dtype=bool),
            criterion=self.criterion, max_depth=self.max_depth,
            min_leaf=self.min_leaf, max_features=None, rng=None,
        )
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        assert self.tree is not None, "model not fitted"
        return self.tree.predict_value(np.asarray(X, dtype=np.float64))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "criterion": self.criterion,
            "tree": self.tree.to_dict() if self.tree else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTreeModel":
        model = cls(max_depth=d["max_depth"], min_leaf=d["min_leaf"], criterion=d["criterion"])
        if d["tree"] is not None:
            model.tree = _Tree.from_dict(d["tree"])
        return model


class RandomForestModel:
    """Bagged trees with per-node feature subsampling."""

    kind = "random_forest"

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int = 25,
        min_leaf: int = 1,
        criterion: str = "gini",
        seed: int = 0,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.criterion = criterion
        self.seed = seed
        self.trees: list[_Tree] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForestModel":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n = X.shape[0]
        max_features = max(1, int(math.isqrt(X.shape[1])))
        self.trees = []
        for t in range(self.n_trees):
            rng = make_rng(self.seed, 0xF0, t)
            boot = rng.integers(0, n, size=n)
            Xb = X[boot]
            yb = y[boot]
            tree = _grow_classification_tree(
                Xb, _presort(Xb), yb, np.ones(n, dtype=bool),
                criterion=self.criterion, max_depth=self.max_depth,
                min_leaf=self.min_leaf, max_features=max_features, rng=rng,
            )
            self.trees.append(tree)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        assert self.trees, "model not fitted"
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            votes += tree.predict_value(X)
        return votes / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "criterion": self.criterion,
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestModel":
        model = cls(
            n_trees=d["n_trees"], max_depth=d["max_depth"], min_leaf=d["min_leaf"],
            criterion=d["criterion"], seed=d["seed"],
        )
        model.trees = [_Tree.from_dict(t) for t in d["trees"]]
        return model


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


class BoostedTreesModel:
    """Gradient-boosted trees on log-loss with Newton leaf values."""

    kind = "boosted_trees"

    def __init__(
        self,
        n_rounds: int = 200,
        max_depth: int = 6,
        learning_rate: float = 0.1,
        min_leaf: int = 1,
        reg_lambda: float = 1.0,
    ):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_leaf = min_leaf
        self.reg_lambda = reg_lambda
        self.base_score = 0.0
        self.trees: list[_Tree] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BoostedTreesModel":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        p0 = min(max(float(np.mean(y)), 1e-6), 1.0 - 1e-6)
        self.base_score = math.log(p0 / (1.0 - p0))
        sort_idx = _presort(X)
        raw = np.full(X.shape[0], self.base_score, dtype=np.float64)
        self.trees = []
        for _ in range(self.n_rounds):
            p = _sigmoid(raw)
            g = p - y
            h = p * (1.0 - p)
            tree = _grow_gradient_tree(
                X, sort_idx, g, h,
                max_depth=self.max_depth, min_leaf=self.min_leaf,
                reg_lambda=self.reg_lambda,
            )
            self.trees.append(tree)
            raw += self.learning_rate * tree.predict_value(X)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        assert self.trees, "model not fitted"
        X = np.asarray(X, dtype=np.float64)
        raw = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            raw += self.learning_rate * tree.predict_value(X)
        return _sigmoid(raw)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_rounds": self.n_rounds,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_leaf": self.min_leaf,
            "reg_lambda": self.reg_lambda,
            "base_score": self.base_score,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedTreesModel":
        model = cls(
            n_rounds=d["n_rounds"], max_depth=d["max_depth"],
            learning_rate=d["learning_rate"], min_leaf=d["min_leaf"],
            reg_lambda=d["reg_lambda"],
        )
        model.base_score = d["base_score"]
        model.trees = [_Tree.from_dict(t) for t in d["trees"]]
        return model


_MODEL_KINDS = {
    DecisionTreeModel.kind: DecisionTreeModel,
    RandomForestModel.kind: RandomForestModel,
    BoostedTreesModel.kind: BoostedTreesModel,
}


def predict_labels(model, X: np.ndarray) -> list[str]:
    """Map a fitted model's P(ai) scores to human/ai labels at 0.5."""
    from .records import AI, HUMAN

    return [AI if p >= 0.5 else HUMAN for p in model.predict_proba(X)]


def train_tree(features: np.ndarray, labels: np.ndarray, algo: str, **params):
    """Fit one of the baseline learners; predictions are P(ai)."""
    if algo not in _MODEL_KINDS:
        raise BaselineError(f"unknown algorithm {algo!r}; choose from {sorted(_MODEL_KINDS)}")
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0:
        raise BaselineError("need at least one example")
    model = _MODEL_KINDS[algo](**params)
    model.fit(np.asarray(features, dtype=np.float64), y)
    return model


def save_model(model, path: str | Path, feature_names: Sequence[str] | None = None) -> None:
    payload = {"model": model.to_dict()}
    if feature_names is not None:
        payload["feature_names"] = list(feature_names)
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = payload["model"]["kind"]
    return _MODEL_KINDS[kind].from_dict(payload["model"])


# ---------------------------------------------------------------------------
# TF-IDF
# ---------------------------------------------------------------------------


@dataclass
class TfidfModel:
    """Smoothed TF-IDF: idf(t) = ln((1+N)/(1+df(t))) + 1, vectors L2-normalized."""

    vocabulary: dict[str, int]
    idf: np.ndarray
    token_pattern: str = CODE_TOKEN_RE.pattern

    def transform(self, docs: Sequence[str]) -> np.ndarray:
        pattern = re.compile(self.token_pattern)
        X = np.zeros((len(docs), len(self.vocabulary)), dtype=np.float64)
        for i, doc in enumerate(docs):
            for tok in pattern.findall(doc):
                j = self.vocabulary.get(tok)
                if j is not None:
                    X[i, j] += 1.0
        X *= self.idf
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return X / norms

    def to_dict(self) -> dict:
        return {
            "vocabulary": self.vocabulary,
            "idf": self.idf.tolist(),
            "token_pattern": self.token_pattern,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TfidfModel":
        return cls(
            vocabulary={k: int(v) for k, v in d["vocabulary"].items()},
            idf=np.asarray(d["idf"], dtype=np.float64),
            token_pattern=d["token_pattern"],
        )


def tfidf_fit_transform(corpus: Sequence[str]) -> tuple[TfidfModel, np.ndarray]:
    """Fit the vocabulary and idf weights on corpus and transform it."""
    if not corpus:
        raise BaselineError("cannot fit TF-IDF on an empty corpus")
    df: dict[str, int] = {}
    for doc in corpus:
        for tok in set(code_tokens(doc)):
            df[tok] = df.get(tok, 0) + 1
    vocabulary = {tok: i for i, tok in enumerate(sorted(df))}
    n = len(corpus)
    idf = np.empty(len(vocabulary), dtype=np.float64)
    for tok, i in vocabulary.items():
        idf[i] = math.log((1 + n) / (1 + df[tok])) + 1.0
    model = TfidfModel(vocabulary=vocabulary, idf=idf)
    return model, model.transform(corpus)


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CvResult:
    fold_scores: tuple[float, ...]
    mean: float
    std: float


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Disjoint, exhaustive folds with per-class counts within one of equal."""
    if k < 2:
        raise BaselineError(f"k must be >= 2, got {k}")
    assignments = np.empty(y.size, dtype=np.int64)
    rng = make_rng(seed, 0xCF)
    for cls in np.unique(y):
        idxs = np.flatnonzero(y == cls)
        if idxs.size < k:
            raise BaselineError(
                f"class {cls} has {idxs.size} examples, need at least k={k}"
            )
        perm = rng.permutation(idxs.size)
        assignments[idxs[perm]] = np.arange(idxs.size) % k
    return [np.flatnonzero(assignments == f) for f in range(k)]


def cross_validate(
    model_factory: Callable[[], object],
    X: np.ndarray,
    y: np.ndarray,
    k: int = 10,
    seed: int = 0,
) -> CvResult:
    """Stratified k-fold accuracy of a freshly built model per fold."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_folds(y, k, seed)
    scores: list[float] = []
    for f, test_idx in enumerate(folds):
        train_mask = np.ones(y.size, dtype=bool)
        train_mask[test_idx] = False
        model = model_factory()
        model.fit(X[train_mask], y[train_mask])
        pred = (model.predict_proba(X[test_idx]) >= 0.5).astype(np.int64)
        scores.append(float(np.mean(pred == y[test_idx])))
    arr = np.asarray(scores)
    return CvResult(
        fold_scores=tuple(scores),
        mean=float(np.mean(arr)),
        std=float(np.std(arr)),
    )
