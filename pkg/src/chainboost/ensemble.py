"""Inference over a trained ensemble.

Two modes: chained ("recurrent") prediction, where each round's learner
sees the accumulated (predicted label, error rate) history of the rounds
before it and the final learner's answer is the ensemble's answer; and a
coefficient-weighted vote over chain-free per-round predictions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import ChainboostError, CompatibilityError
from .learners import PredictionResult


@dataclass(frozen=True)
class ChainContext:
    """Ordered (predicted label, error rate) pairs from earlier rounds.

    Behaves like a sequence of entries, so it can be handed directly to a
    featurizer or prompt builder. The error rate attached to an entry is
    the training-time error of that round, frozen in the model, not a
    per-sample confidence.
    """

    entries: tuple = ()

    def __post_init__(self):
        entries = tuple((int(label), float(eps)) for label, eps in self.entries)
        object.__setattr__(self, "entries", entries)
        for label, eps in entries:
            if label < 0:
                raise ValueError(f"chain label {label} must be >= 0")
            if not 0.0 <= eps < 1.0:
                raise ValueError(f"chain epsilon {eps} outside [0, 1)")

    def __len__(self):
        return len(self.entries)

    def __bool__(self):
        return bool(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def extended(self, label: int, eps: float) -> "ChainContext":
        return ChainContext(self.entries + ((label, eps),))


def recurrent_predictions(model, texts):
    """Run the chain over a batch. Returns (final results, per-round labels).

    per_round_labels[k][i] is round k's predicted label for text i; the
    chain handed to round k has exactly k entries (rounds are 0-based
    here, so the first round sees an empty chain).
    """
    if not model.rounds:
        raise ChainboostError("model has no rounds")
    contexts = [ChainContext() for _ in texts]
    per_round = []
    results = None
    for rnd in model.rounds:
        results = rnd.learner.predict_many(texts, contexts)
        labels = [r.label for r in results]
        per_round.append(labels)
        contexts = [ctx.extended(label, rnd.epsilon)
                    for ctx, label in zip(contexts, labels)]
    return results, per_round


def predict_recurrent(model, text: str) -> PredictionResult:
    results, _ = recurrent_predictions(model, [text])
    return results[0]


def vote_predictions(model, texts):
    """Chain-free per-round predictions combined by coefficient vote."""
    if not model.rounds:
        raise ChainboostError("model has no rounds")
    alphas = [rnd.alpha for rnd in model.rounds]
    if any(a < 0 for a in alphas) or sum(alphas) <= 0:
        raise ChainboostError(
            f"degenerate model: vote needs positive coefficients, got {alphas}")
    c = model.label_map.c
    total = sum(alphas)
    per_round = [rnd.learner.predict_many(texts) for rnd in model.rounds]
    results = []
    for i in range(len(texts)):
        scores = np.zeros(c, dtype=np.float64)
        for k, rnd in enumerate(model.rounds):
            scores[per_round[k][i].label] += rnd.alpha
        results.append(PredictionResult.from_scores(scores / total))
    return results


def predict_weighted_vote(model, text: str) -> PredictionResult:
    return vote_predictions(model, [text])[0]


EVAL_MODES = ("recurrent", "weighted_vote")


def evaluate(model, corpus, mode: str = "recurrent") -> metrics.MetricsReport:
    if mode not in EVAL_MODES:
        raise ChainboostError(f"mode must be one of {EVAL_MODES}, got {mode!r}")
    if corpus.label_map.names != model.label_map.names:
        raise CompatibilityError(
            f"model labels {model.label_map.names} != corpus labels {corpus.label_map.names}")
    texts = corpus.texts()
    if mode == "recurrent":
        results, _ = recurrent_predictions(model, texts)
    else:
        results = vote_predictions(model, texts)
    predictions = [r.label for r in results]
    return metrics.report(predictions, corpus.labels(), corpus.label_map.c)
