"""Featurizer, prediction contract, and the three classical learners."""

import math

import numpy as np
import pytest

from chainboost.errors import ConfigError, TrainingError
from chainboost.kernels import hash_token
from chainboost.learners import (
    Featurizer,
    LogisticLearner,
    NaiveBayesLearner,
    PredictionResult,
    StumpLearner,
    create_learner,
    learner_from_state,
    logistic_loss_grad,
    tokenize,
)
from conftest import make_corpus
from oracles import TRACE_CORPUS, chain_slots


def bucket(token, dim=1024):
    return hash_token(token) & (dim - 1)


class TestTokenize:
    def test_splits_on_punctuation_and_lowercases(self):
        assert tokenize("Hello, world!") == ["hello", "world"]

    def test_lowercase_off(self):
        assert tokenize("Hello THERE", lowercase=False) == ["Hello", "THERE"]

    def test_underscore_separates(self):
        assert tokenize("snake_case_id") == ["snake", "case", "id"]

    def test_digits_kept(self):
        assert tokenize("4 score, 7 years") == ["4", "score", "7", "years"]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("  \t\n") == []


class TestFeaturizerConfig:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigError):
            Featurizer(dim=1500)

    def test_rejects_small_dim(self):
        with pytest.raises(ConfigError):
            Featurizer(dim=512)

    def test_rejects_unknown_mode(self):
        with pytest.raises(ConfigError):
            Featurizer(dim=1024, mode="counts")

    def test_rejects_single_class(self):
        with pytest.raises(ConfigError):
            Featurizer(dim=1024, num_classes=1)

    def test_width_reserves_chain_slots(self):
        fz = Featurizer(dim=2048, num_classes=4)
        assert fz.width == 2048 + 4 + 1


class TestFeaturizerTransform:
    def test_bag_of_words_counts(self):
        fz = Featurizer(dim=1024, num_classes=2)
        idx, val = fz.transform("flint dune Flint")
        got = dict(zip(idx.tolist(), val.tolist()))
        assert got == {bucket("flint"): 2.0, bucket("dune"): 1.0}
        assert idx.tolist() == sorted(idx.tolist())

    def test_chain_slots_match_layout(self):
        fz = Featurizer(dim=1024, num_classes=3)
        idx, val = fz.transform("", chain=[(2, 0.25)])
        got = dict(zip(idx.tolist(), val.tolist()))
        want = {1024 + k: v for k, v in chain_slots(2, 0.25, 3).items()}
        assert got == pytest.approx(want)

    def test_only_last_chain_entry_encoded(self):
        fz = Featurizer(dim=1024, num_classes=2)
        long = fz.transform("dune", chain=[(0, 0.5), (1, 0.25)])
        last = fz.transform("dune", chain=[(1, 0.25)])
        assert np.array_equal(long[0], last[0])
        assert np.array_equal(long[1], last[1])

    def test_zero_epsilon_drops_eps_slot(self):
        fz = Featurizer(dim=1024, num_classes=2)
        idx, val = fz.transform("", chain=[(0, 0.0)])
        assert idx.tolist() == [1024]
        assert val.tolist() == [1.0]

    def test_chain_validation(self):
        fz = Featurizer(dim=1024, num_classes=2)
        with pytest.raises(ValueError):
            fz.transform("x", chain=[(2, 0.1)])
        with pytest.raises(ValueError):
            fz.transform("x", chain=[(-1, 0.1)])
        with pytest.raises(ValueError):
            fz.transform("x", chain=[(0, 1.0)])
        with pytest.raises(ValueError):
            fz.transform("x", chain=[(0, -0.1)])

    def test_transform_corpus_alignment(self):
        fz = Featurizer(dim=1024, num_classes=2)
        with pytest.raises(ValueError):
            fz.transform_corpus(["a", "b"], chain=[[(0, 0.1)]])
        out = fz.transform_corpus(["a", "b"], chain=[[(0, 0.1)], None])
        assert 1024 in out[0][0].tolist()
        assert 1024 not in out[1][0].tolist()


class TestFeaturizerTfidf:
    def test_hand_computed_idf(self):
        fz = Featurizer(dim=1024, mode="tfidf", num_classes=2)
        fz.fit_corpus(["apple banana", "apple cherry"])
        idx, val = fz.transform("apple apple banana")
        got = dict(zip(idx.tolist(), val.tolist()))
        # idf = log((1 + n_docs) / (1 + df)) + 1
        idf_apple = math.log(3.0 / 3.0) + 1.0
        idf_banana = math.log(3.0 / 2.0) + 1.0
        assert got == pytest.approx({
            bucket("apple"): 2.0 * idf_apple,
            bucket("banana"): 1.0 * idf_banana,
        }, rel=1e-15)

    def test_unseen_token_gets_max_idf(self):
        fz = Featurizer(dim=1024, mode="tfidf", num_classes=2)
        fz.fit_corpus(["apple banana", "apple cherry"])
        idx, val = fz.transform("durian")
        assert val.tolist() == pytest.approx([math.log(3.0) + 1.0], rel=1e-15)

    def test_bag_of_words_fit_is_noop(self):
        fz = Featurizer(dim=1024, num_classes=2)
        before = fz.transform("apple")
        fz.fit_corpus(["apple apple", "apple"])
        after = fz.transform("apple")
        assert np.array_equal(before[1], after[1])

    def test_config_roundtrip_preserves_idf(self):
        fz = Featurizer(dim=1024, mode="tfidf", num_classes=3)
        fz.fit_corpus(["apple banana", "apple cherry", "cherry cherry"])
        fz2 = Featurizer.from_config(fz.to_config())
        for text in ("apple banana durian", ""):
            a = fz.transform(text, chain=[(1, 0.125)])
            b = fz2.transform(text, chain=[(1, 0.125)])
            assert np.array_equal(a[0], b[0])
            assert np.array_equal(a[1], b[1])


class TestPredictionResult:
    def test_from_scores_argmax(self):
        r = PredictionResult.from_scores(np.array([0.2, 0.7, 0.1]))
        assert r.label == 1

    def test_tie_goes_to_lowest_index(self):
        r = PredictionResult.from_scores(np.array([0.4, 0.4, 0.2]))
        assert r.label == 0

    def test_label_must_be_argmax(self):
        with pytest.raises(ValueError):
            PredictionResult(label=1, scores=np.array([0.5, 0.5]))

    def test_rejects_negative_scores(self):
        with pytest.raises(ValueError):
            PredictionResult(label=0, scores=np.array([1.2, -0.2]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PredictionResult(label=0, scores=np.array([np.nan, 1.0]))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            PredictionResult(label=0, scores=np.array([0.5, 0.4]))

    def test_coerces_to_float_array(self):
        r = PredictionResult(label=1, scores=[0.25, 0.75])
        assert r.scores.dtype == np.float64


class TestNaiveBayes:
    def test_hand_computed_binary(self):
        corpus = make_corpus(["cat cat", "dog"], [0, 1], ("felid", "canid"))
        fz = Featurizer(dim=1024, num_classes=2)
        nb = NaiveBayesLearner(fz).fit(corpus)
        assert np.array_equal(nb.class_log_prior_,
                              np.log(np.array([0.5, 0.5])))
        assert nb.total_mass_.tolist() == [1.0, 0.5]
        # width 1027; smoothing 1: theta_0(cat) = 2/1028, theta_1(cat) = 1/1027.5
        r = nb.predict("cat")
        odds = (0.5 * 2.0 / 1028.0) / (0.5 * 1.0 / 1027.5)
        assert r.label == 0
        assert r.scores[0] / r.scores[1] == pytest.approx(odds, rel=1e-12)

    def test_weight_equals_duplication(self):
        a = make_corpus(["cat", "cat", "dog"], [0, 0, 1], ("x", "y"))
        b = make_corpus(["cat", "dog"], [0, 1], ("x", "y"))
        nb_a = NaiveBayesLearner(Featurizer(dim=1024, num_classes=2)).fit(a)
        nb_b = NaiveBayesLearner(Featurizer(dim=1024, num_classes=2)).fit(
            b, weights=np.array([2.0 / 3.0, 1.0 / 3.0]))
        assert np.array_equal(nb_a.class_log_prior_, nb_b.class_log_prior_)
        for text in ("cat", "dog", "cat dog ferret"):
            assert np.array_equal(nb_a.predict(text).scores,
                                  nb_b.predict(text).scores)

    def test_zero_weight_class_names_the_class(self):
        corpus = make_corpus(["a", "b"], [0, 1], ("alpha", "beta"))
        nb = NaiveBayesLearner(Featurizer(dim=1024, num_classes=2))
        with pytest.raises(TrainingError, match="beta"):
            nb.fit(corpus, weights=np.array([1.0, 0.0]))

    def test_signed_features_rejected(self):
        # "a" and "foobar" both hash with the sign bit set
        corpus = make_corpus(["foobar", "a"], [0, 1], ("x", "y"))
        nb = NaiveBayesLearner(Featurizer(dim=1024, signed=True, num_classes=2))
        with pytest.raises(TrainingError, match="unsigned"):
            nb.fit(corpus)

    def test_class_count_mismatch(self):
        corpus = make_corpus(["a", "b"], [0, 1], ("x", "y"))
        nb = NaiveBayesLearner(Featurizer(dim=1024, num_classes=3))
        with pytest.raises(ConfigError):
            nb.fit(corpus)

    def test_unfitted_predict(self):
        nb = NaiveBayesLearner(Featurizer(dim=1024, num_classes=2))
        with pytest.raises(TrainingError):
            nb.predict("x")

    def test_rejects_bad_smoothing(self):
        with pytest.raises(ConfigError):
            NaiveBayesLearner(Featurizer(dim=1024, num_classes=2), smoothing=0.0)

    def test_state_roundtrip(self, toy_binary):
        nb = NaiveBayesLearner(Featurizer(dim=1024, num_classes=2)).fit(toy_binary)
        nb2 = NaiveBayesLearner.from_state(nb.to_state())
        for text in ("bitter sweet", "ripe sun", "unseen"):
            assert np.array_equal(nb.predict(text).scores,
                                  nb2.predict(text).scores)


class TestLogisticGradient:
    def _setup(self, rng):
        width, c = 7, 3
        feats = [
            (np.array([0, 3], dtype=np.int64), np.array([1.0, 2.0])),
            (np.array([1], dtype=np.int64), np.array([1.5])),
            (np.array([2, 4, 6], dtype=np.int64), np.array([1.0, 1.0, 0.5])),
            (np.array([0, 5], dtype=np.int64), np.array([2.0, 1.0])),
            (np.array([3, 6], dtype=np.int64), np.array([1.0, 3.0])),
        ]
        labels = [0, 1, 2, 0, 1]
        sample_w = [0.3, 0.1, 0.25, 0.15, 0.2]
        W = rng.normal(scale=0.3, size=(c, width))
        b = rng.normal(scale=0.3, size=c)
        return W, b, feats, labels, sample_w

    def test_loss_at_origin_is_weighted_log_c(self):
        _, _, feats, labels, sample_w = self._setup(np.random.default_rng(3))
        loss, _, _ = logistic_loss_grad(
            np.zeros((3, 7)), np.zeros(3), feats, labels, sample_w)
        assert loss == pytest.approx(sum(sample_w) * math.log(3.0), rel=1e-12)

    def test_gradient_matches_central_differences(self, rng):
        W, b, feats, labels, sample_w = self._setup(rng)
        l2 = 0.01
        loss, dW, db = logistic_loss_grad(W, b, feats, labels, sample_w, l2=l2)
        h = 1e-6

        def at(Wp, bp):
            return logistic_loss_grad(Wp, bp, feats, labels, sample_w, l2=l2)[0]

        fd_W = np.zeros_like(W)
        for k in range(W.shape[0]):
            for j in range(W.shape[1]):
                up = W.copy()
                dn = W.copy()
                up[k, j] += h
                dn[k, j] -= h
                fd_W[k, j] = (at(up, b) - at(dn, b)) / (2 * h)
        fd_b = np.zeros_like(b)
        for k in range(len(b)):
            up = b.copy()
            dn = b.copy()
            up[k] += h
            dn[k] -= h
            fd_b[k] = (at(W, up) - at(W, dn)) / (2 * h)
        assert np.allclose(dW, fd_W, rtol=1e-5, atol=1e-8)
        assert np.allclose(db, fd_b, rtol=1e-5, atol=1e-8)

    def test_bias_not_penalized(self):
        _, _, feats, labels, sample_w = self._setup(np.random.default_rng(5))
        W = np.zeros((3, 7))
        b = np.full(3, 2.0)
        _, _, db0 = logistic_loss_grad(W, b, feats, labels, sample_w, l2=0.0)
        _, _, db1 = logistic_loss_grad(W, b, feats, labels, sample_w, l2=10.0)
        assert np.array_equal(db0, db1)


class TestLogisticLearner:
    def test_separable_corpus_learned(self, toy_binary):
        learner = LogisticLearner(Featurizer(dim=1024, num_classes=2),
                                  epochs=30, learning_rate=0.5)
        learner.fit(toy_binary)
        preds = [learner.predict(s.text).label for s in toy_binary.samples]
        assert preds == list(toy_binary.labels())

    def test_zero_weight_sample_is_a_noop(self):
        texts = ["aa bb", "zz", "cc dd"]
        full = make_corpus(texts, [0, 1, 1], ("x", "y"))
        trimmed = make_corpus(["aa bb", "cc dd"], [0, 1], ("x", "y"))
        la = LogisticLearner(Featurizer(dim=1024, num_classes=2), seed=11)
        lb = LogisticLearner(Featurizer(dim=1024, num_classes=2), seed=11)
        la.fit(full, weights=np.array([0.5, 0.0, 0.5]))
        lb.fit(trimmed, weights=np.array([0.5, 0.5]))
        assert np.array_equal(la.W_, lb.W_)
        assert np.array_equal(la.b_, lb.b_)
        assert la.epoch_losses_ == lb.epoch_losses_

    def test_loss_decreases(self, toy_binary):
        learner = LogisticLearner(Featurizer(dim=1024, num_classes=2), epochs=10)
        learner.fit(toy_binary)
        assert len(learner.epoch_losses_) == 10
        assert learner.epoch_losses_[-1] < learner.epoch_losses_[0]

    def test_diverging_run_raises(self):
        # lr * l2 > 2 makes the per-visit decay factor explode weights
        corpus = make_corpus(["zig zag", "zig zag"], [0, 1], ("x", "y"))
        learner = LogisticLearner(Featurizer(dim=1024, num_classes=2),
                                  epochs=200, learning_rate=50.0, l2=1.0)
        with pytest.raises(TrainingError, match="non-finite"):
            learner.fit(corpus)

    def test_all_zero_weights_rejected(self):
        corpus = make_corpus(["a", "b"], [0, 1], ("x", "y"))
        learner = LogisticLearner(Featurizer(dim=1024, num_classes=2))
        with pytest.raises(TrainingError):
            learner.fit(corpus, weights=np.zeros(2))

    def test_constructor_validation(self):
        fz = Featurizer(dim=1024, num_classes=2)
        with pytest.raises(ConfigError):
            LogisticLearner(fz, epochs=0)
        with pytest.raises(ConfigError):
            LogisticLearner(fz, learning_rate=0.0)
        with pytest.raises(ConfigError):
            LogisticLearner(fz, l2=-1e-3)

    def test_unfitted_predict(self):
        learner = LogisticLearner(Featurizer(dim=1024, num_classes=2))
        with pytest.raises(TrainingError):
            learner.predict("x")

    def test_state_roundtrip(self, toy_binary):
        learner = LogisticLearner(Featurizer(dim=1024, num_classes=2),
                                  epochs=5, seed=3).fit(toy_binary)
        other = LogisticLearner.from_state(learner.to_state())
        for text in ("bitter rind", "sweet sun", "novel words here"):
            assert np.array_equal(learner.predict(text).scores,
                                  other.predict(text).scores)


def brute_best_feature_error(token_sets, labels, weights, c):
    """Best achievable error over all single-feature presence rules."""
    total = [0.0] * c
    for y, w in zip(labels, weights):
        total[y] += w
    best = math.inf
    for tok in sorted({t for s in token_sets for t in s}):
        pres = [0.0] * c
        for s, y, w in zip(token_sets, labels, weights):
            if tok in s:
                pres[y] += w
        absent = [total[k] - pres[k] for k in range(c)]
        err = (sum(pres) - max(pres)) + (sum(absent) - max(absent))
        best = min(best, err)
    return best


class TestStump:
    def test_trace_round_one_rule(self):
        texts = [t for t, _ in TRACE_CORPUS]
        labels = [y for _, y in TRACE_CORPUS]
        corpus = make_corpus(texts, labels, ("no", "yes"))
        stump = StumpLearner(Featurizer(dim=32768, num_classes=2)).fit(corpus)
        assert stump.feature_ == bucket("ember", dim=32768)
        assert stump.cls_present_ == 1
        assert stump.cls_absent_ == 0
        assert stump.train_error_ == pytest.approx(0.25, abs=1e-15)
        assert stump.predict("ember dusk").label == 1
        assert stump.predict("dusk").label == 0

    def test_matches_brute_force_on_random_corpora(self, rng):
        # the brute force enumerates tokens, the scan enumerates buckets;
        # this vocab maps to distinct buckets at dim 4096 so the two agree
        vocab = ["ash", "bay", "cove", "dell", "elm", "fen", "gorge", "heath"]
        for _ in range(20):
            n, c = 25, 3
            token_sets = []
            texts = []
            for _ in range(n):
                k = int(rng.integers(1, 5))
                words = rng.choice(len(vocab), size=k, replace=False)
                toks = [vocab[int(w)] for w in words]
                token_sets.append(set(toks))
                texts.append(" ".join(toks))
            labels = [int(v) for v in rng.integers(0, c, size=n)]
            if len(set(labels)) < c:
                continue
            w = rng.random(n)
            w /= w.sum()
            corpus = make_corpus(texts, labels, ("p", "q", "r"))
            stump = StumpLearner(Featurizer(dim=4096, num_classes=c))
            stump.fit(corpus, weights=w)
            want = brute_best_feature_error(token_sets, labels, w, c)
            assert stump.train_error_ == pytest.approx(want, abs=1e-12)
            achieved = sum(
                wi for text, y, wi in zip(texts, labels, w)
                if stump.predict(text).label != y)
            assert achieved == pytest.approx(stump.train_error_, abs=1e-12)

    def test_constant_fallback_without_features(self):
        # punctuation-only texts tokenize to nothing
        corpus = make_corpus(["--", "??", "!!"], [0, 1, 1], ("x", "y"))
        stump = StumpLearner(Featurizer(dim=1024, num_classes=2)).fit(corpus)
        assert stump.feature_ == -1
        assert stump.cls_present_ == stump.cls_absent_ == 1
        assert stump.train_error_ == pytest.approx(1.0 / 3.0)
        r = stump.predict("whatever text")
        assert r.label == 1
        assert r.scores.tolist() == [0.0, 1.0]

    def test_scores_are_one_hot(self, toy_binary):
        stump = StumpLearner(Featurizer(dim=1024, num_classes=2)).fit(toy_binary)
        r = stump.predict("sweet")
        assert r.scores.sum() == 1.0
        assert r.scores[r.label] == 1.0

    def test_state_roundtrip(self, toy_binary):
        stump = StumpLearner(Featurizer(dim=1024, num_classes=2)).fit(toy_binary)
        other = StumpLearner.from_state(stump.to_state())
        for text in ("bitter", "sweet", "neither"):
            assert stump.predict(text).label == other.predict(text).label


class TestRegistry:
    def test_create_naive_bayes_with_params(self):
        fz = Featurizer(dim=1024, num_classes=2)
        learner = create_learner("naive_bayes", fz, {"smoothing": 2.5})
        assert isinstance(learner, NaiveBayesLearner)
        assert learner.smoothing == 2.5

    def test_create_logistic_passes_seed(self):
        fz = Featurizer(dim=1024, num_classes=2)
        learner = create_learner("logistic", fz, {"epochs": 3}, seed=7)
        assert isinstance(learner, LogisticLearner)
        assert learner.epochs == 3
        assert learner.seed == 7

    def test_create_stump(self):
        fz = Featurizer(dim=1024, num_classes=2)
        assert isinstance(create_learner("stump", fz), StumpLearner)

    def test_unknown_kind_lists_known(self):
        fz = Featurizer(dim=1024, num_classes=2)
        with pytest.raises(ConfigError, match="naive_bayes"):
            create_learner("boosted_trees", fz)

    def test_unknown_kind_in_state(self):
        with pytest.raises(ConfigError):
            learner_from_state("mystery", {})
