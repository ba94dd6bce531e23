from __future__ import annotations

import math

import numpy as np
import pytest

from codestylo.baselines import (
    BaselineError, BoostedTreesModel, CvResult, DecisionTreeModel, RandomForestModel,
    code_tokens, cross_validate, extract_features, feature_names, features_matrix,
    load_model, save_model, stratified_folds, tfidf_fit_transform, train_tree,
)


class TestFeatures:
    def test_single_line_python(self):
        fv = extract_features("x = 1", "Python")
        named = dict(zip(fv.names, fv.values))
        assert named["line_count"] == 1.0
        assert named["blank_line_ratio"] == 0.0
        assert named["token_count"] == 3.0

    def test_duplication_doubles_lines_keeps_frequencies(self):
        code = "for x in items:\n    total = total + x"
        one = extract_features(code, "Python")
        two = extract_features(code + "\n" + code, "Python")
        named1 = dict(zip(one.names, one.values))
        named2 = dict(zip(two.names, two.values))
        assert named2["line_count"] == 2 * named1["line_count"]
        assert named2["token_count"] == 2 * named1["token_count"]
        for kw in ("kw_for", "kw_in"):
            assert named2[kw] == pytest.approx(named1[kw])

    def test_keyword_free_snippet(self):
        fv = extract_features("a = b + c", "Python")
        named = dict(zip(fv.names, fv.values))
        assert all(v == 0.0 for k, v in named.items() if k.startswith("kw_"))

    def test_unknown_language_rejected(self):
        with pytest.raises(BaselineError):
            extract_features("x", "Brainfuck")

    def test_fixed_dimension_and_determinism(self):
        dim = len(feature_names("Java"))
        codes = ["int a = 1;", "class Foo {}\n// comment", "while (true) { break; }"]
        X = features_matrix(codes, "Java")
        assert X.shape == (3, dim)
        assert np.array_equal(X, features_matrix(codes, "Java"))
        assert np.all(np.isfinite(X))

    def test_comment_and_numeric_ratios(self):
        fv = extract_features("// note\nint x = 42;", "Java")
        named = dict(zip(fv.names, fv.values))
        assert named["comment_line_ratio"] == 0.5
        assert named["numeric_literal_ratio"] > 0


class TestTrees:
    def test_linearly_separable_single_feature(self):
        X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
        y = np.array([0, 0, 0, 1, 1, 1])
        for algo in ("c45_style_tree", "random_forest", "boosted_trees"):
            model = train_tree(X, y, algo, **({"seed": 0} if algo == "random_forest" else {}))
            pred = (model.predict_proba(X) >= 0.5).astype(int)
            assert np.array_equal(pred, y), algo

    def test_xor_needs_depth_two(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0])
        tree = DecisionTreeModel(max_depth=2).fit(X, y)
        pred = (tree.predict_proba(X) >= 0.5).astype(int)
        assert np.array_equal(pred, y)
        stump = DecisionTreeModel(max_depth=1).fit(X, y)
        pred1 = (stump.predict_proba(X) >= 0.5).astype(int)
        assert not np.array_equal(pred1, y)

    def test_constant_features_give_majority_stump(self):
        X = np.ones((6, 3))
        y = np.array([0, 0, 1, 1, 1, 1])
        tree = DecisionTreeModel().fit(X, y)
        assert tree.tree.feature == [-1]
        assert np.all(tree.predict_proba(X) == pytest.approx(4 / 6))

    def test_unknown_algo(self):
        with pytest.raises(BaselineError):
            train_tree(np.ones((2, 1)), np.array([0, 1]), "svm")

    def test_predict_labels_maps_to_human_ai(self):
        from codestylo.baselines import predict_labels

        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        y = np.array([0, 0, 1, 1])
        model = train_tree(X, y, "c45_style_tree")
        assert predict_labels(model, X) == ["human", "human", "ai", "ai"]

    def test_forest_deterministic_under_seed(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 5))
        y = (X[:, 0] + X[:, 1] > 0).astype(int)
        a = RandomForestModel(n_trees=10, seed=3).fit(X, y).predict_proba(X)
        b = RandomForestModel(n_trees=10, seed=3).fit(X, y).predict_proba(X)
        assert np.array_equal(a, b)

    def test_boosted_trees_fit_noisy_signal(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(120, 4))
        y = (X[:, 2] > 0.1).astype(int)
        model = BoostedTreesModel(n_rounds=30, max_depth=3).fit(X, y)
        acc = np.mean((model.predict_proba(X) >= 0.5).astype(int) == y)
        assert acc >= 0.98

    def test_serialized_model_predicts_identically(self, tmp_path):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(60, 6))
        y = (X[:, 0] > 0).astype(int)
        held_out = rng.normal(size=(30, 6))
        for algo, params in (
            ("c45_style_tree", {}),
            ("random_forest", {"n_trees": 8, "seed": 1}),
            ("boosted_trees", {"n_rounds": 15}),
        ):
            model = train_tree(X, y, algo, **params)
            path = tmp_path / f"{algo}.json"
            save_model(model, path, feature_names=[f"f{i}" for i in range(6)])
            reloaded = load_model(path)
            assert np.array_equal(model.predict_proba(held_out),
                                  reloaded.predict_proba(held_out)), algo


class TestTfidf:
    def test_one_document_idf_is_one(self):
        model, X = tfidf_fit_transform(["a b c"])
        assert np.allclose(model.idf, 1.0)

    def test_term_in_all_docs_idf_is_one(self):
        model, _ = tfidf_fit_transform(["x common", "y common", "z common"])
        assert model.idf[model.vocabulary["common"]] == pytest.approx(1.0)
        assert model.idf[model.vocabulary["x"]] == pytest.approx(math.log(4 / 2) + 1)

    def test_vectors_l2_normalized(self):
        _, X = tfidf_fit_transform(["a b b c", "c d", "e"])
        norms = np.linalg.norm(X, axis=1)
        assert np.allclose(norms, 1.0)

    def test_empty_document_gives_zero_vector(self):
        model, _ = tfidf_fit_transform(["a b", "c"])
        X = model.transform([""])
        assert np.all(X == 0.0)

    def test_unseen_terms_contribute_zero(self):
        model, _ = tfidf_fit_transform(["a b", "b c"])
        X = model.transform(["a unseen_term"])
        assert X[0, model.vocabulary["a"]] > 0
        assert np.count_nonzero(X) == 1

    def test_three_document_hand_computed_values(self):
        docs = ["cat dog", "cat cat fish", "dog"]
        model, X = tfidf_fit_transform(docs)
        n = 3
        idf = {t: math.log((1 + n) / (1 + df)) + 1
               for t, df in (("cat", 2), ("dog", 2), ("fish", 1))}
        raw0 = np.zeros(3)
        for tok, count in (("cat", 1), ("dog", 1)):
            raw0[model.vocabulary[tok]] = count * idf[tok]
        expected0 = raw0 / np.linalg.norm(raw0)
        assert np.allclose(X[0], expected0, atol=1e-9)
        raw1 = np.zeros(3)
        raw1[model.vocabulary["cat"]] = 2 * idf["cat"]
        raw1[model.vocabulary["fish"]] = 1 * idf["fish"]
        assert np.allclose(X[1], raw1 / np.linalg.norm(raw1), atol=1e-9)

    def test_empty_corpus_rejected(self):
        with pytest.raises(BaselineError):
            tfidf_fit_transform([])

    def test_tokenization_rule_recorded(self):
        model, _ = tfidf_fit_transform(["a"])
        assert model.token_pattern
        assert code_tokens("x=1") == ["x", "=", "1"]


class TestCrossValidation:
    def test_perfect_signal_all_folds_one(self):
        X = np.concatenate([np.zeros((20, 1)), np.ones((20, 1))])
        y = np.concatenate([np.zeros(20, dtype=int), np.ones(20, dtype=int)])
        result = cross_validate(lambda: DecisionTreeModel(), X, y, k=10, seed=0)
        assert result.fold_scores == tuple([1.0] * 10)
        assert result.mean == 1.0

    def test_fold_partition_properties(self):
        y = np.array([0] * 50 + [1] * 50)
        folds = stratified_folds(y, k=10, seed=1)
        all_idx = np.concatenate(folds)
        assert len(all_idx) == 100
        assert len(set(all_idx.tolist())) == 100
        for fold in folds:
            assert len(fold) == 10
            assert np.sum(y[fold] == 0) == 5

    def test_stratification_within_one(self):
        y = np.array([0] * 23 + [1] * 31)
        folds = stratified_folds(y, k=5, seed=2)
        for cls in (0, 1):
            counts = [int(np.sum(y[f] == cls)) for f in folds]
            assert max(counts) - min(counts) <= 1

    def test_mean_is_arithmetic_mean(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 2, size=60)
        result = cross_validate(lambda: DecisionTreeModel(max_depth=3), X, y, k=5, seed=0)
        assert result.mean == pytest.approx(float(np.mean(result.fold_scores)))
        assert result.std == pytest.approx(float(np.std(result.fold_scores)))

    def test_label_independent_features_near_chance(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(200, 5))
        y = np.array([0, 1] * 100)
        result = cross_validate(lambda: DecisionTreeModel(max_depth=5), X, y, k=10, seed=3)
        assert 0.3 <= result.mean <= 0.7

    def test_validation_errors(self):
        y = np.array([0] * 5 + [1] * 5)
        X = np.zeros((10, 1))
        with pytest.raises(BaselineError):
            cross_validate(lambda: DecisionTreeModel(), X, y, k=1, seed=0)
        with pytest.raises(BaselineError):
            stratified_folds(np.array([0, 1]), k=3, seed=0)

    def test_cv_result_is_frozen(self):
        result = CvResult(fold_scores=(1.0,), mean=1.0, std=0.0)
        with pytest.raises(AttributeError):
            result.mean = 0.5
