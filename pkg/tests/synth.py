"""Synthetic corpora for the test suite.

The four-class news-style generator plants a hard minority
subpopulation inside every class: those samples lead with strong
vocabulary of a confuser class and carry only a weaker trace of their
own class. A single uniformly weighted learner follows the majority
evidence and mislabels most of them; re-weighting forces later rounds
to pay attention, which is exactly the effect the boosting tests need
to observe.
"""
from __future__ import annotations

import numpy as np

from chainboost.dataset import ClassLabelMap, Corpus, LabeledSample

NEWS_LABELS = ("World", "Sports", "Business", "SciTech")

_STRONG = {
    0: ("parliament", "treaty", "border", "minister", "embassy", "summit"),
    1: ("coach", "season", "playoff", "stadium", "striker", "tournament"),
    2: ("shares", "merger", "profit", "market", "investor", "quarterly"),
    3: ("software", "rocket", "genome", "chip", "quantum", "browser"),
}

_NOISE = (
    "the", "a", "on", "after", "new", "over", "first", "plan", "report",
    "year", "week", "amid", "talks", "deal", "late", "early", "move",
    "set", "to", "for", "in", "group", "city", "wide", "front", "push",
)

# each class is confusable with its paired class
_CONFUSER = {0: 2, 2: 0, 1: 3, 3: 1}


def news_corpus(n, seed, minority_fraction=0.25, start_id=0):
    """Four-class corpus of `n` samples, class-balanced by round robin."""
    rng = np.random.default_rng([seed, 829])
    samples = []
    for i in range(n):
        y = i % 4
        strong = _STRONG[y]
        if rng.random() < minority_fraction:
            conf = _STRONG[_CONFUSER[y]]
            toks = [conf[rng.integers(len(conf))] for _ in range(3)]
            toks += [strong[rng.integers(len(strong))] for _ in range(2)]
            toks += [_NOISE[rng.integers(len(_NOISE))] for _ in range(3)]
        else:
            toks = [strong[rng.integers(len(strong))] for _ in range(4)]
            toks += [_NOISE[rng.integers(len(_NOISE))] for _ in range(4)]
        order = rng.permutation(len(toks))
        text = " ".join(toks[j] for j in order)
        samples.append(LabeledSample(id=start_id + i, text=text, label=y))
    return Corpus(samples=tuple(samples), label_map=ClassLabelMap(NEWS_LABELS))


def sentiment_echo_corpus(n, seed, embed_label=True, start_id=0):
    """Balanced binary corpus whose texts spell out their own label.

    With embed_label the literal words Positive/Negative appear in the
    text, so a mock endpoint that echoes a label it finds in the prompt
    acts as a perfect oracle. Without it the texts carry cue words only.
    """
    rng = np.random.default_rng([seed, 311])
    pos_cues = ("great", "superb", "delight", "crisp", "warm")
    neg_cues = ("awful", "broken", "dull", "sour", "cold")
    samples = []
    for i in range(n):
        y = i % 2
        cues = pos_cues if y == 1 else neg_cues
        toks = [cues[rng.integers(len(cues))] for _ in range(3)]
        if embed_label:
            toks.insert(int(rng.integers(len(toks) + 1)),
                        "Positive" if y == 1 else "Negative")
        samples.append(LabeledSample(id=start_id + i, text=" ".join(toks), label=y))
    return Corpus(samples=tuple(samples),
                  label_map=ClassLabelMap(("Negative", "Positive")))
