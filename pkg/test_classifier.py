"""
Unit tests for TF-IDF features, weak supervision and logistic regression.

Structure:
- TF-IDF fitting and vectorisation
- Training set construction from query output
- Loss, gradient and gradient descent
- Model artifacts and scoring

Run with: pytest test_classifier.py -v
"""

from __future__ import annotations

import json
import logging

import numpy as np
import pytest

from core.parallel import ParallelExecutor
from sdg.classifier import (
    Hyperparams,
    LogRegModel,
    TfidfConfig,
    build_training_set,
    document_terms,
    fit_sdg,
    fit_tfidf,
    loss_and_gradient,
    predict,
    probability,
    score_corpus,
    top_features,
    train,
    train_binary,
    vectorize,
)
from sdg.common import (
    ConfigurationError,
    EmptyInputError,
    ModelFormatError,
    Provenance,
    SdgMapping,
    TrainingError,
)
from sdg.corpus import Corpus
from sdg.query_engine import run_query_bank

MIN1 = TfidfConfig(min_df=1)


@pytest.fixture
def water_corpus(make_record, make_corpus) -> Corpus:
    return make_corpus(
        make_record("W1", title="Safe drinking water", abstract="water sanitation access"),
        make_record("W2", title="Water sanitation in schools", abstract="hygiene water"),
        make_record("W3", title="Rural water supply", abstract="water access wells"),
        make_record("G1", title="Galaxy clusters", abstract="dark matter halos"),
        make_record("G2", title="Star formation", abstract="galaxy gas dust"),
        make_record("G3", title="Neutron star mergers", abstract="gravitational waves"),
        make_record("G4", title="Dark energy survey", abstract="galaxy redshift"),
    )


@pytest.fixture
def water_mapping() -> SdgMapping:
    mapping = SdgMapping()
    for rid in ("W1", "W2"):
        mapping.add_theme_hit(rid, 6, "Drinking water")
    return mapping


# ============================================================================
# TF-IDF TESTS
# ============================================================================


class TestTfidf:
    """Tests for the TF-IDF feature space."""

    # True Cases
    def test_idf_of_ubiquitous_term(self, make_record, make_corpus):
        """TF-IDF: A term in every document has idf exactly 1."""
        corpus = make_corpus(
            make_record("A", title="water"),
            make_record("B", title="water policy"),
            make_record("C", title="clean water"),
        )
        tfidf = fit_tfidf(corpus, MIN1)
        assert tfidf.idf[tfidf.vocabulary["water"]] == 1.0
        assert tfidf.idf[tfidf.vocabulary["policy"]] > 1.0

    def test_rows_unit_norm(self, corpus):
        """TF-IDF: Non-empty rows have unit L2 norm."""
        X = fit_tfidf(corpus).transform(corpus)
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        assert np.all(np.abs(norms[norms > 0] - 1.0) < 1e-12)

    def test_vocabulary_lexicographic(self, corpus):
        """TF-IDF: Column order follows the sorted vocabulary."""
        terms = fit_tfidf(corpus).terms
        assert terms == sorted(terms)

    def test_subject_tokens(self, make_record):
        """TF-IDF: Subject codes add code and area tokens."""
        terms = document_terms(make_record("A", asjc_codes=(2739,)))
        assert terms == ["asjc_2739", "area_medicine"]

    def test_fulltext_terms(self, make_record):
        """TF-IDF: Full-text terms feed the bag when present."""
        rec = make_record("A", title="Water", fulltext_terms=("groundwater recharge",))
        assert document_terms(rec) == ["water", "groundwater", "recharge"]

    def test_vectorize_matches_transform(self, water_corpus):
        """TF-IDF: vectorize gives the transform row of one record."""
        tfidf = fit_tfidf(water_corpus, MIN1)
        rec = water_corpus["W1"]
        vec = vectorize(rec, tfidf)
        assert np.allclose(vec.to_dense(), tfidf.transform([rec]).toarray()[0])
        assert vec.norm() == pytest.approx(1.0)

    # False Cases
    def test_min_df_drops_rare_terms(self, water_corpus):
        """TF-IDF: Terms below min_df are dropped."""
        tfidf = fit_tfidf(water_corpus, TfidfConfig(min_df=2))
        assert "water" in tfidf.vocabulary
        assert "hygiene" not in tfidf.vocabulary

    def test_out_of_vocabulary_ignored(self, water_corpus, make_record):
        """TF-IDF: Unknown tokens contribute nothing."""
        tfidf = fit_tfidf(water_corpus, MIN1)
        vec = vectorize(make_record("X", title="zzz qqq"), tfidf)
        assert vec.indices.size == 0
        assert vec.norm() == 0.0

    # Edge Cases
    def test_max_features_keeps_frequent(self, water_corpus):
        """TF-IDF: The vocabulary cap keeps the most frequent terms."""
        tfidf = fit_tfidf(water_corpus, TfidfConfig(min_df=1, max_features=2))
        assert list(tfidf.vocabulary) == ["galaxy", "water"]

    def test_empty_corpus(self):
        """TF-IDF: Fitting needs at least one document."""
        with pytest.raises(EmptyInputError):
            fit_tfidf(Corpus())

    def test_bad_config(self):
        """TF-IDF: Out-of-range settings are rejected."""
        with pytest.raises(ConfigurationError):
            TfidfConfig(min_df=0)
        with pytest.raises(ConfigurationError):
            TfidfConfig(fields=("title", "authors"))


# ============================================================================
# TRAINING SET TESTS
# ============================================================================


class TestTrainingSets:
    """Tests for deriving labelled sets from query output."""

    # True Cases
    def test_positives_are_query_hits(self, water_mapping, water_corpus):
        """Training sets: Positives are exactly the query-assigned records."""
        sets = build_training_set(water_mapping, water_corpus, ratio=2.0, sdgs=[6])
        labeled = sets.sets[6]
        assert labeled.positive_ids == ("W1", "W2")
        assert len(labeled.negative_ids) == 4
        assert not set(labeled.negative_ids) & {"W1", "W2"}
        assert list(labeled.labels) == [1, 1, 0, 0, 0, 0]

    def test_negative_count_capped(self, water_mapping, water_corpus):
        """Training sets: Negatives never exceed the available records."""
        sets = build_training_set(water_mapping, water_corpus, ratio=10.0, sdgs=[6])
        assert len(sets.sets[6].negative_ids) == 5

    def test_seeded(self, synthetic, bank, index):
        """Training sets: The same seed gives the same sample."""
        mapping = run_query_bank(bank, index)
        a = build_training_set(mapping, synthetic.corpus, ratio=3.0, seed=5)
        b = build_training_set(mapping, synthetic.corpus, ratio=3.0, seed=5)
        assert a.sets == b.sets
        for labeled in a.sets.values():
            assert not set(labeled.negative_ids) & mapping.records_for(labeled.sdg)

    # False Cases
    def test_ml_assignments_not_positive(self, water_mapping, water_corpus):
        """Training sets: ML assignments are neither positive nor negative."""
        water_mapping.assign("W3", 6, Provenance.ML)
        labeled = build_training_set(water_mapping, water_corpus, ratio=10.0, sdgs=[6]).sets[6]
        assert "W3" not in labeled.positive_ids
        assert "W3" not in labeled.negative_ids

    def test_sdg_without_positives_skipped(self, water_mapping, water_corpus):
        """Training sets: SDGs without positives are reported as skipped."""
        sets = build_training_set(water_mapping, water_corpus, sdgs=[3, 6])
        assert set(sets.sets) == {6}
        assert sets.skipped == {3: "no positives"}

    # Edge Cases
    def test_bad_ratio(self, water_mapping, water_corpus):
        """Training sets: Ratio must be positive."""
        with pytest.raises(ConfigurationError):
            build_training_set(water_mapping, water_corpus, ratio=0)

    def test_no_candidate_negatives(self, make_record, make_corpus):
        """Training sets: An SDG covering every record is skipped."""
        corpus = make_corpus(make_record("A"), make_record("B"))
        mapping = SdgMapping()
        for rid in ("A", "B"):
            mapping.add_theme_hit(rid, 6, "Water")
        sets = build_training_set(mapping, corpus, sdgs=[6])
        assert sets.skipped == {6: "no candidate negatives"}

    def test_ratio_rounding_to_zero_skips(self, water_mapping, water_corpus):
        """Training sets: A sample size that rounds down to zero skips the SDG."""
        sets = build_training_set(water_mapping, water_corpus, ratio=0.4, sdgs=[6])
        assert sets.sets == {}
        assert sets.skipped == {6: "no negatives at this ratio"}
        half = build_training_set(water_mapping, water_corpus, ratio=0.5, sdgs=[6])
        assert len(half.sets[6].negative_ids) == 1


# ============================================================================
# OPTIMISATION TESTS
# ============================================================================


def numeric_gradient(X, y, w, b, l2, eps=1e-6):
    grad = np.zeros(len(w) + 1)
    for j in range(len(w) + 1):
        wp, wm = w.copy(), w.copy()
        bp, bm = b, b
        if j < len(w):
            wp[j] += eps
            wm[j] -= eps
        else:
            bp += eps
            bm -= eps
        lp = loss_and_gradient(X, y, wp, bp, l2)[0]
        lm = loss_and_gradient(X, y, wm, bm, l2)[0]
        grad[j] = (lp - lm) / (2 * eps)
    return grad


class TestLogisticRegression:
    """Tests for the loss, gradient and gradient descent."""

    # True Cases
    def test_gradient_matches_finite_differences(self):
        """LogReg: Analytic gradient agrees with central differences."""
        rng = np.random.default_rng(0)
        for _ in range(100):
            n, d = rng.integers(2, 9), rng.integers(1, 7)
            X = rng.normal(size=(n, d))
            y = rng.integers(0, 2, size=n).astype(float)
            w = rng.normal(size=d)
            b = float(rng.normal())
            l2 = float(rng.uniform(0, 1))
            _, gw, gb = loss_and_gradient(X, y, w, b, l2)
            analytic = np.append(gw, gb)
            numeric = numeric_gradient(X, y, w, b, l2)
            err = np.linalg.norm(analytic - numeric) / max(
                np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12
            )
            assert err < 1e-5

    def test_separable_data(self, water_corpus, water_mapping):
        """LogReg: Training separates a clearly separable set."""
        tfidf = fit_tfidf(water_corpus, MIN1)
        sets = build_training_set(water_mapping, water_corpus, ratio=10.0, sdgs=[6])
        hp = Hyperparams(l2=0.0, learning_rate=2.0, iterations=500)
        model = train(tfidf, water_corpus, sets, hp)
        scores = score_corpus(water_corpus, model)
        assert scores["W1"][6] > 0.5
        assert scores["G1"][6] < 0.5

    def test_loss_decreases(self):
        """LogReg: Gradient descent lowers the loss."""
        X = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]])
        y = np.array([1.0, 1.0, 0.0, 0.0])
        fit = train_binary(X, y, Hyperparams(iterations=50))
        assert len(fit.losses) == 50
        assert fit.losses[-1] < fit.losses[0]
        assert all(b <= a + 1e-12 for a, b in zip(fit.losses, fit.losses[1:]))

    def test_separable_twenty_documents(self, make_record, make_corpus):
        """LogReg: Default settings classify a separable 20-document set perfectly at 0.5."""
        water = ["water", "sanitation", "drinking", "wells", "latrines"]
        space = ["galaxy", "stellar", "quasar", "nebula", "comet"]

        def doc(rid, words, i):
            return make_record(
                rid,
                title=f"{words[i % 5]} {words[(i + 1) % 5]}",
                abstract=f"{words[(i // 5 + 2) % 5]} {words[i % 5]}",
            )

        corpus = make_corpus(
            *(doc(f"P{i}", water, i) for i in range(10)),
            *(doc(f"N{i}", space, i) for i in range(10)),
        )
        mapping = SdgMapping()
        for i in range(10):
            mapping.add_theme_hit(f"P{i}", 6, "Water")
        sets = build_training_set(mapping, corpus, ratio=10.0, sdgs=[6])
        assert len(sets.sets[6].negative_ids) == 10

        model = train(fit_tfidf(corpus, MIN1), corpus, sets, Hyperparams())
        scores = score_corpus(corpus, model)
        correct = sum((scores[rid][6] > 0.5) == rid.startswith("P") for rid in corpus.ids)
        assert correct / len(corpus) == 1.0

    def test_loss_monotone_on_synthetic(self, corpus, bank, index):
        """LogReg: With the default step the loss never rises on the synthetic corpus."""
        mapping = run_query_bank(bank, index)
        tfidf = fit_tfidf(corpus, TfidfConfig())
        sets = build_training_set(mapping, corpus)
        X_all = tfidf.transform(corpus)
        row_of = {rid: i for i, rid in enumerate(corpus.ids)}
        hp = Hyperparams(iterations=100)
        assert hp.learning_rate == Hyperparams().learning_rate
        assert sets.sets
        for sdg, labeled in sets.sets.items():
            losses = fit_sdg(sdg, X_all, row_of, labeled, hp).losses
            assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:])), sdg
            assert losses[-1] < losses[0], sdg

    def test_executor_matches_train(self, water_corpus, water_mapping, caplog):
        """LogReg: The in-process executor builds the same model as train."""
        tfidf = fit_tfidf(water_corpus, MIN1)
        sets = build_training_set(water_mapping, water_corpus, sdgs=[3, 6])
        hp = Hyperparams(iterations=30)
        direct = train(tfidf, water_corpus, sets, hp)
        caplog.clear()
        with caplog.at_level(logging.INFO, logger="sdg.classifier"):
            pooled = ParallelExecutor(workers=1, progress_every=0).train_models(
                tfidf, water_corpus, sets, hp
            )
        assert pooled.sdgs == direct.sdgs == [6]
        assert np.array_equal(pooled.weights[6], direct.weights[6])
        assert pooled.biases == direct.biases
        assert pooled.skipped == direct.skipped == {3: "no positives"}
        assert sum("[train] sdg=6" in r.getMessage() for r in caplog.records) == 1

    def test_deterministic(self, water_corpus, water_mapping):
        """LogReg: Identical inputs give identical weights."""
        tfidf = fit_tfidf(water_corpus, MIN1)
        sets = build_training_set(water_mapping, water_corpus, sdgs=[6])
        a = train(tfidf, water_corpus, sets, Hyperparams(iterations=20))
        b = train(tfidf, water_corpus, sets, Hyperparams(iterations=20))
        assert np.array_equal(a.weights[6], b.weights[6])
        assert a.biases == b.biases

    # False Cases
    def test_zero_iterations_give_half(self, water_corpus, water_mapping):
        """LogReg: Untrained models predict 0.5 everywhere."""
        tfidf = fit_tfidf(water_corpus, MIN1)
        sets = build_training_set(water_mapping, water_corpus, sdgs=[6])
        model = train(tfidf, water_corpus, sets, Hyperparams(iterations=0))
        assert all(s[6] == 0.5 for s in score_corpus(water_corpus, model).values())

    def test_single_class_rejected(self):
        """LogReg: Labels need both classes."""
        with pytest.raises(TrainingError):
            train_binary(np.eye(2), np.ones(2), Hyperparams())

    # Edge Cases
    def test_l2_shrinks_weights(self):
        """LogReg: A stronger penalty gives smaller weights."""
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        y = np.array([1.0, 0.0])
        free = train_binary(X, y, Hyperparams(l2=0.0, iterations=200))
        tight = train_binary(X, y, Hyperparams(l2=1.0, iterations=200))
        assert np.linalg.norm(tight.weights) < np.linalg.norm(free.weights)

    def test_probability_clipped(self):
        """LogReg: Probabilities stay strictly inside (0, 1)."""
        p = probability(np.array([-1000.0, 0.0, 1000.0]))
        assert 0.0 < p[0] < p[1] < p[2] < 1.0
        assert p[1] == 0.5

    def test_bad_hyperparams(self):
        """LogReg: Out-of-range hyperparameters are rejected."""
        with pytest.raises(ConfigurationError):
            Hyperparams(learning_rate=0)
        with pytest.raises(ConfigurationError):
            Hyperparams(threshold=1.5)
        with pytest.raises(ConfigurationError):
            Hyperparams(l2=-1)


# ============================================================================
# MODEL ARTIFACT TESTS
# ============================================================================


class TestModelArtifact:
    """Tests for saving, loading and inspecting trained models."""

    @pytest.fixture
    def model(self, water_corpus, water_mapping) -> LogRegModel:
        tfidf = fit_tfidf(water_corpus, MIN1)
        sets = build_training_set(water_mapping, water_corpus, sdgs=[3, 6])
        return train(tfidf, water_corpus, sets, Hyperparams(iterations=100, learning_rate=1.0))

    # True Cases
    def test_save_load_scores(self, model, water_corpus, tmp_path):
        """Model: A reloaded model scores identically."""
        path = tmp_path / "model.json"
        model.save(path)
        loaded = LogRegModel.load(path)
        assert loaded.sdgs == [6]
        assert loaded.skipped == {3: "no positives"}
        assert loaded.threshold == model.threshold
        assert score_corpus(water_corpus, loaded) == score_corpus(water_corpus, model)

    def test_predict_single_record(self, model, water_corpus):
        """Model: predict agrees with corpus scoring."""
        rec = water_corpus["W3"]
        assert predict(rec, model.tfidf, model) == score_corpus(water_corpus, model)["W3"]

    def test_negated_model_complements(self, model, water_corpus):
        """Model: Negating weights and bias turns every p into 1 - p."""
        negated = LogRegModel(
            tfidf=model.tfidf,
            weights={s: -w for s, w in model.weights.items()},
            biases={s: -b for s, b in model.biases.items()},
            hyperparams=model.hyperparams,
            skipped=dict(model.skipped),
        )
        for rec in water_corpus:
            p = predict(rec, model.tfidf, model)[6]
            q = predict(rec, negated.tfidf, negated)[6]
            assert q == pytest.approx(1.0 - p, abs=1e-12)

    def test_top_features(self, model):
        """Model: Top features are positive weights, largest first."""
        feats = top_features(model, 6, k=3)
        assert 0 < len(feats) <= 3
        weights = [w for _, w in feats]
        assert weights == sorted(weights, reverse=True)
        assert all(w > 0 for w in weights)
        assert "sanitation" in dict(top_features(model, 6, k=50))

    # False Cases
    def test_unknown_sdg_features(self, model):
        """Model: Key phrases need a trained SDG."""
        with pytest.raises(ConfigurationError):
            top_features(model, 3)

    def test_wrong_format_version(self, model, tmp_path):
        """Model: Unknown artifact versions are rejected."""
        obj = model.to_dict()
        obj["format_version"] = 99
        path = tmp_path / "model.json"
        path.write_text(json.dumps(obj), encoding="utf-8")
        with pytest.raises(ModelFormatError, match="version"):
            LogRegModel.load(path)

    # Edge Cases
    def test_not_json(self, tmp_path):
        """Model: A non-JSON file is a format error."""
        path = tmp_path / "model.json"
        path.write_text("not a model", encoding="utf-8")
        with pytest.raises(ModelFormatError):
            LogRegModel.load(path)

    def test_weight_shape_checked(self, model):
        """Model: Weight vectors must match the vocabulary."""
        obj = model.to_dict()
        obj["models"]["6"]["weights"] = [0.0]
        with pytest.raises(ModelFormatError):
            LogRegModel.from_dict(obj)
