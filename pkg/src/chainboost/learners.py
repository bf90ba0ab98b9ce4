"""Base learners: weighted naive Bayes, logistic-regression SGD, and a
decision stump.

All learners share one contract: fit on a corpus with per-sample weights
(or on an already count-expanded corpus with uniform weights) and produce
deterministic probabilistic predictions. When a chain context is supplied,
the featurizer embeds the previous round's predicted label and error rate
into reserved feature slots, so classical learners see the same signal a
prompt-based learner gets in its prompt.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .dataset import Corpus
from .errors import ConfigError, TrainingError
from .weights import WeightDistribution

# chain entry: (predicted label index, error rate of that round)
ChainEntry = tuple

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

FEATURIZER_MODES = ("bag_of_words", "tfidf")

_LOSS_FLOOR = 1e-15


def tokenize(text: str, lowercase: bool = True) -> list:
    """Split on whitespace and punctuation; underscores separate tokens."""
    if lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


class Featurizer:
    """Hashing featurizer with reserved slots for chain features.

    Tokens hash into buckets [0, dim); dim must be a power of two >= 1024.
    The last num_classes + 1 slots are reserved: when a chain context is
    present, slot dim + prev_label holds (1 - eps_prev), a one-hot of the
    previous prediction scaled by how trustworthy that round was, and slot
    dim + num_classes holds eps_prev itself.
    """

    def __init__(self, dim: int = 32768, mode: str = "bag_of_words",
                 lowercase: bool = True, signed: bool = False, num_classes: int = 2):
        if dim < 1024 or dim & (dim - 1) != 0:
            raise ConfigError(f"featurizer dim must be a power of two >= 1024, got {dim}")
        if mode not in FEATURIZER_MODES:
            raise ConfigError(f"featurizer mode must be one of {FEATURIZER_MODES}, got {mode!r}")
        if num_classes < 2:
            raise ConfigError(f"featurizer needs >= 2 classes, got {num_classes}")
        self.dim = dim
        self.mode = mode
        self.lowercase = lowercase
        self.signed = signed
        self.num_classes = num_classes
        # tfidf state, filled by fit_corpus
        self._n_docs = 0
        self._df_idx = np.empty(0, dtype=np.int64)
        self._df_val = np.empty(0, dtype=np.int64)

    @property
    def width(self) -> int:
        return self.dim + self.num_classes + 1

    def fit_corpus(self, texts: Sequence[str]) -> "Featurizer":
        """Compute document frequencies (tfidf mode only; no-op otherwise)."""
        if self.mode != "tfidf":
            return self
        df: dict = {}
        for text in texts:
            idx, _ = kernels.featurize(tokenize(text, self.lowercase), self.dim, self.signed)
            for f in idx:
                f = int(f)
                df[f] = df.get(f, 0) + 1
        items = sorted(df.items())
        self._n_docs = len(texts)
        self._df_idx = np.array([f for f, _ in items], dtype=np.int64)
        self._df_val = np.array([v for _, v in items], dtype=np.int64)
        return self

    def _idf(self, idx: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self._df_idx, idx)
        df = np.zeros(len(idx), dtype=np.float64)
        ok = (pos < len(self._df_idx))
        ok[ok] = self._df_idx[pos[ok]] == idx[ok]
        df[ok] = self._df_val[pos[ok]]
        return np.log((1.0 + self._n_docs) / (1.0 + df)) + 1.0

    def transform(self, text: str, chain: Optional[Sequence[ChainEntry]] = None):
        """Return sorted sparse (indices, values) for one document."""
        idx, val = kernels.featurize(tokenize(text, self.lowercase), self.dim, self.signed)
        if self.mode == "tfidf":
            val = val * self._idf(idx)
        if chain:
            prev_label, eps = chain[-1]
            prev_label = int(prev_label)
            eps = float(eps)
            if not 0 <= prev_label < self.num_classes:
                raise ValueError(f"chain label {prev_label} out of range")
            if not 0.0 <= eps < 1.0:
                raise ValueError(f"chain epsilon {eps} outside [0, 1)")
            extra_idx = []
            extra_val = []
            if 1.0 - eps != 0.0:
                extra_idx.append(self.dim + prev_label)
                extra_val.append(1.0 - eps)
            if eps != 0.0:
                extra_idx.append(self.dim + self.num_classes)
                extra_val.append(eps)
            if extra_idx:
                idx = np.concatenate([idx, np.array(extra_idx, dtype=np.int64)])
                val = np.concatenate([val, np.array(extra_val, dtype=np.float64)])
        return idx, val

    def transform_corpus(self, texts: Sequence[str],
                         chain: Optional[Sequence] = None) -> list:
        """Per-sample chain is a sequence of histories aligned with texts."""
        if chain is None:
            return [self.transform(t) for t in texts]
        if len(chain) != len(texts):
            raise ValueError("chain length must match number of texts")
        return [self.transform(t, h) for t, h in zip(texts, chain)]

    def to_config(self) -> dict:
        cfg = {
            "dim": self.dim,
            "mode": self.mode,
            "lowercase": self.lowercase,
            "signed": self.signed,
            "num_classes": self.num_classes,
        }
        if self.mode == "tfidf":
            cfg["idf"] = {
                "n_docs": self._n_docs,
                "df_idx": self._df_idx,
                "df_val": self._df_val,
            }
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "Featurizer":
        fz = cls(dim=cfg["dim"], mode=cfg["mode"], lowercase=cfg["lowercase"],
                 signed=cfg["signed"], num_classes=cfg["num_classes"])
        idf = cfg.get("idf")
        if idf is not None:
            fz._n_docs = int(idf["n_docs"])
            fz._df_idx = np.asarray(idf["df_idx"], dtype=np.int64)
            fz._df_val = np.asarray(idf["df_val"], dtype=np.int64)
        return fz


@dataclass(frozen=True)
class PredictionResult:
    label: int
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        if np.any(scores < 0) or not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite and nonnegative")
        if abs(float(scores.sum()) - 1.0) > 1e-6:
            raise ValueError(f"scores sum to {scores.sum()}, expected 1")
        if self.label != int(np.argmax(scores)):
            raise ValueError("label must be the argmax of scores (lowest index on ties)")

    @classmethod
    def from_scores(cls, scores: np.ndarray) -> "PredictionResult":
        scores = np.asarray(scores, dtype=np.float64)
        return cls(label=int(np.argmax(scores)), scores=scores)


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def _weight_vector(corpus: Corpus, weights) -> np.ndarray:
    n = len(corpus)
    if weights is None:
        return np.full(n, 1.0 / n)
    if isinstance(weights, WeightDistribution):
        w = weights.values
    else:
        w = np.asarray(weights, dtype=np.float64)
    if len(w) != n:
        raise ValueError(f"weights length {len(w)} != corpus size {n}")
    return w


class BaseLearner:
    """Contract: fit(corpus, weights, chain) then deterministic predict.

    Trained learners are immutable as far as predict is concerned; predict
    never mutates state and is safe to call from multiple threads.
    """

    kind = "base"

    def fit(self, corpus: Corpus, weights=None, chain=None) -> "BaseLearner":
        raise NotImplementedError

    def predict(self, text: str, chain: Optional[Sequence[ChainEntry]] = None) -> PredictionResult:
        raise NotImplementedError

    def predict_many(self, texts: Sequence[str], chains: Optional[Sequence] = None) -> list:
        if chains is None:
            return [self.predict(t) for t in texts]
        if len(chains) != len(texts):
            raise ValueError("chains length must match number of texts")
        return [self.predict(t, h) for t, h in zip(texts, chains)]

    def to_state(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_state(cls, state: dict) -> "BaseLearner":
        raise NotImplementedError


class NaiveBayesLearner(BaseLearner):
    """Multinomial naive Bayes over weight-scaled counts.

    Weights enter as fractional counts: a sample with weight 2w contributes
    exactly what two copies at weight w would. Likelihoods get additive
    smoothing; priors are the exact weighted class proportions, and a class
    with zero total weight is an error rather than a silently absent class.
    """

    kind = "naive_bayes"

    def __init__(self, featurizer: Featurizer, smoothing: float = 1.0):
        if smoothing <= 0:
            raise ConfigError(f"smoothing must be > 0, got {smoothing}")
        self.featurizer = featurizer
        self.smoothing = smoothing
        self.class_log_prior_ = None
        self.feat_idx_ = None   # per class: sorted bucket indices with mass
        self.feat_mass_ = None  # per class: weighted counts at those buckets
        self.total_mass_ = None

    def fit(self, corpus: Corpus, weights=None, chain=None) -> "NaiveBayesLearner":
        c = corpus.label_map.c
        if c != self.featurizer.num_classes:
            raise ConfigError(f"featurizer built for {self.featurizer.num_classes} classes, corpus has {c}")
        w = _weight_vector(corpus, weights)
        texts = corpus.texts()
        self.featurizer.fit_corpus(texts)
        feats = self.featurizer.transform_corpus(texts, chain)
        labels = np.asarray(corpus.labels(), dtype=np.int64)
        class_w, feat_w = kernels.nb_accumulate(
            [f[0] for f in feats], [f[1] for f in feats],
            labels, w, c, self.featurizer.width)
        for k in range(c):
            if class_w[k] <= 0.0:
                raise TrainingError(f"class {k} ({corpus.label_map.names[k]}) has zero total weight")
        if np.any(feat_w < 0):
            raise TrainingError("negative feature mass; use an unsigned featurizer for naive Bayes")
        self.class_log_prior_ = np.log(class_w / class_w.sum())
        self.feat_idx_ = []
        self.feat_mass_ = []
        for k in range(c):
            nz = np.flatnonzero(feat_w[k])
            self.feat_idx_.append(nz.astype(np.int64))
            self.feat_mass_.append(feat_w[k][nz])
        self.total_mass_ = feat_w.sum(axis=1)
        return self

    def _log_likelihood(self, idx: np.ndarray, val: np.ndarray) -> np.ndarray:
        c = len(self.class_log_prior_)
        s = self.smoothing
        width = self.featurizer.width
        ll = np.empty(c, dtype=np.float64)
        for k in range(c):
            pos = np.searchsorted(self.feat_idx_[k], idx)
            mass = np.zeros(len(idx), dtype=np.float64)
            ok = pos < len(self.feat_idx_[k])
            ok[ok] = self.feat_idx_[k][pos[ok]] == idx[ok]
            mass[ok] = self.feat_mass_[k][pos[ok]]
            log_theta = np.log(mass + s) - math.log(self.total_mass_[k] + s * width)
            ll[k] = self.class_log_prior_[k] + float(val @ log_theta)
        return ll

    def predict(self, text, chain=None) -> PredictionResult:
        if self.class_log_prior_ is None:
            raise TrainingError("learner is not fitted")
        idx, val = self.featurizer.transform(text, chain)
        return PredictionResult.from_scores(_softmax(self._log_likelihood(idx, val)))

    def to_state(self) -> dict:
        return {
            "featurizer": self.featurizer.to_config(),
            "smoothing": self.smoothing,
            "class_log_prior": self.class_log_prior_,
            "feat_idx": list(self.feat_idx_),
            "feat_mass": list(self.feat_mass_),
            "total_mass": self.total_mass_,
        }

    @classmethod
    def from_state(cls, state: dict) -> "NaiveBayesLearner":
        learner = cls(Featurizer.from_config(state["featurizer"]), smoothing=state["smoothing"])
        learner.class_log_prior_ = np.asarray(state["class_log_prior"], dtype=np.float64)
        learner.feat_idx_ = [np.asarray(a, dtype=np.int64) for a in state["feat_idx"]]
        learner.feat_mass_ = [np.asarray(a, dtype=np.float64) for a in state["feat_mass"]]
        learner.total_mass_ = np.asarray(state["total_mass"], dtype=np.float64)
        return learner


def logistic_loss_grad(W: np.ndarray, b: np.ndarray, feats: Sequence, labels, sample_w, l2: float = 0.0):
    """Weighted cross-entropy loss and its exact gradient.

    loss = sum_i w_i * CE(y_i, softmax(W x_i + b)) + 0.5 * l2 * ||W||^2
    (bias unpenalized). This is the reference for gradient checking; the
    SGD trainer approximates the penalty with per-visit decay on touched
    features.
    """
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dW = l2 * W
    db = np.zeros_like(b)
    loss = 0.5 * l2 * float((W * W).sum())
    for (idx, val), y, wi in zip(feats, labels, sample_w):
        z = b + W[:, idx] @ val
        p = _softmax(z)
        loss += float(wi) * -math.log(max(p[int(y)], _LOSS_FLOOR))
        g = float(wi) * p
        g[int(y)] -= float(wi)
        db += g
        dW[:, idx] += np.outer(g, val)
    return loss, dW, db


class LogisticLearner(BaseLearner):
    """Multinomial logistic regression trained by seeded SGD.

    Per-sample gradients are scaled by the sample's weight; zero-weight
    samples are skipped entirely, so dropping them changes nothing under
    the same seed. The visit order is a fresh seeded permutation of the
    positive-weight samples each epoch.
    """

    kind = "logistic"

    def __init__(self, featurizer: Featurizer, epochs: int = 20,
                 learning_rate: float = 0.2, l2: float = 1e-4, seed: int = 0):
        if epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {epochs}")
        if learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {learning_rate}")
        if l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {l2}")
        self.featurizer = featurizer
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.l2 = l2
        self.seed = seed
        self.W_ = None
        self.b_ = None
        self.epoch_losses_ = []

    def fit(self, corpus: Corpus, weights=None, chain=None) -> "LogisticLearner":
        c = corpus.label_map.c
        if c != self.featurizer.num_classes:
            raise ConfigError(f"featurizer built for {self.featurizer.num_classes} classes, corpus has {c}")
        w = _weight_vector(corpus, weights)
        texts = corpus.texts()
        self.featurizer.fit_corpus(texts)
        feats = self.featurizer.transform_corpus(texts, chain)
        idx_list = [f[0] for f in feats]
        val_list = [f[1] for f in feats]
        labels = np.asarray(corpus.labels(), dtype=np.int64)
        positive = np.flatnonzero(w > 0)
        if positive.size == 0:
            raise TrainingError("no samples with positive weight")
        W = np.zeros((c, self.featurizer.width), dtype=np.float64)
        b = np.zeros(c, dtype=np.float64)
        self.epoch_losses_ = []
        for epoch in range(self.epochs):
            rng = np.random.default_rng([self.seed, epoch])
            order = positive[rng.permutation(positive.size)].astype(np.int64)
            loss = kernels.sgd_epoch(W, b, order, idx_list, val_list,
                                     labels, w, self.learning_rate, self.l2)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch} "
                    f"(lr={self.learning_rate}, l2={self.l2}); lower the learning rate")
            self.epoch_losses_.append(float(loss))
        self.W_ = W
        self.b_ = b
        return self

    def predict(self, text, chain=None) -> PredictionResult:
        if self.W_ is None:
            raise TrainingError("learner is not fitted")
        idx, val = self.featurizer.transform(text, chain)
        z = self.b_ + self.W_[:, idx] @ val
        return PredictionResult.from_scores(_softmax(z))

    def to_state(self) -> dict:
        cols = np.flatnonzero(np.any(self.W_ != 0, axis=0)).astype(np.int64)
        return {
            "featurizer": self.featurizer.to_config(),
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "seed": self.seed,
            "cols": cols,
            "col_weights": self.W_[:, cols],
            "bias": self.b_,
            "epoch_losses": np.asarray(self.epoch_losses_, dtype=np.float64),
        }

    @classmethod
    def from_state(cls, state: dict) -> "LogisticLearner":
        fz = Featurizer.from_config(state["featurizer"])
        learner = cls(fz, epochs=state["epochs"], learning_rate=state["learning_rate"],
                      l2=state["l2"], seed=state["seed"])
        W = np.zeros((fz.num_classes, fz.width), dtype=np.float64)
        cols = np.asarray(state["cols"], dtype=np.int64)
        W[:, cols] = np.asarray(state["col_weights"], dtype=np.float64)
        learner.W_ = W
        learner.b_ = np.asarray(state["bias"], dtype=np.float64)
        learner.epoch_losses_ = list(np.asarray(state["epoch_losses"], dtype=np.float64))
        return learner


class StumpLearner(BaseLearner):
    """Single-feature presence rule found by exhaustive weighted search.

    Deliberately weak and fully enumerable, which makes boosting traces
    verifiable by hand. Ties go to the lowest feature index, then the
    lowest class index. A corpus with no features at all degenerates to a
    constant majority-class rule.
    """

    kind = "stump"

    def __init__(self, featurizer: Featurizer):
        self.featurizer = featurizer
        self.feature_ = None
        self.cls_present_ = None
        self.cls_absent_ = None
        self.train_error_ = None

    def fit(self, corpus: Corpus, weights=None, chain=None) -> "StumpLearner":
        c = corpus.label_map.c
        if c != self.featurizer.num_classes:
            raise ConfigError(f"featurizer built for {self.featurizer.num_classes} classes, corpus has {c}")
        w = _weight_vector(corpus, weights)
        texts = corpus.texts()
        self.featurizer.fit_corpus(texts)
        feats = self.featurizer.transform_corpus(texts, chain)
        labels = np.asarray(corpus.labels(), dtype=np.int64)
        feature, cls_present, cls_absent, err = kernels.stump_scan(
            [f[0] for f in feats], labels, w, c)
        if feature < 0:
            per_class = np.zeros(c)
            np.add.at(per_class, labels, w)
            majority = int(np.argmax(per_class))
            feature, cls_present, cls_absent = -1, majority, majority
            err = float(w.sum() - per_class[majority])
        self.feature_ = int(feature)
        self.cls_present_ = int(cls_present)
        self.cls_absent_ = int(cls_absent)
        self.train_error_ = float(err)
        return self

    def predict(self, text, chain=None) -> PredictionResult:
        if self.feature_ is None:
            raise TrainingError("learner is not fitted")
        idx, _ = self.featurizer.transform(text, chain)
        present = self.feature_ >= 0 and bool(np.any(idx == self.feature_))
        label = self.cls_present_ if present else self.cls_absent_
        scores = np.zeros(self.featurizer.num_classes)
        scores[label] = 1.0
        return PredictionResult(label=label, scores=scores)

    def to_state(self) -> dict:
        return {
            "featurizer": self.featurizer.to_config(),
            "feature": self.feature_,
            "cls_present": self.cls_present_,
            "cls_absent": self.cls_absent_,
            "train_error": self.train_error_,
        }

    @classmethod
    def from_state(cls, state: dict) -> "StumpLearner":
        learner = cls(Featurizer.from_config(state["featurizer"]))
        learner.feature_ = int(state["feature"])
        learner.cls_present_ = int(state["cls_present"])
        learner.cls_absent_ = int(state["cls_absent"])
        learner.train_error_ = float(state["train_error"])
        return learner


LEARNER_CLASSES = {}
_LEARNER_FACTORIES = {}


def register_learner(cls, factory=None):
    LEARNER_CLASSES[cls.kind] = cls
    if factory is not None:
        _LEARNER_FACTORIES[cls.kind] = factory


def _nb_factory(featurizer, params, seed):
    return NaiveBayesLearner(featurizer, smoothing=params.get("smoothing", 1.0))


def _logistic_factory(featurizer, params, seed):
    return LogisticLearner(
        featurizer,
        epochs=params.get("epochs", 20),
        learning_rate=params.get("learning_rate", 0.2),
        l2=params.get("l2", 1e-4),
        seed=seed,
    )


def _stump_factory(featurizer, params, seed):
    return StumpLearner(featurizer)


register_learner(NaiveBayesLearner, _nb_factory)
register_learner(LogisticLearner, _logistic_factory)
register_learner(StumpLearner, _stump_factory)


def create_learner(kind: str, featurizer: Featurizer, params: Optional[dict] = None,
                   seed: int = 0) -> BaseLearner:
    if kind not in _LEARNER_FACTORIES:
        raise ConfigError(f"unknown learner kind {kind!r}; known: {sorted(_LEARNER_FACTORIES)}")
    return _LEARNER_FACTORIES[kind](featurizer, params or {}, seed)


def learner_from_state(kind: str, state: dict) -> BaseLearner:
    if kind not in LEARNER_CLASSES:
        raise ConfigError(f"unknown learner kind {kind!r} in model")
    return LEARNER_CLASSES[kind].from_state(state)
