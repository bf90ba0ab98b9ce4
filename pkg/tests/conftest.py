import numpy as np
import pytest

from chainboost.dataset import ClassLabelMap, Corpus, LabeledSample
from chainboost.mockserver import MockCompletionServer


def make_corpus(texts, labels, names):
    samples = tuple(
        LabeledSample(id=i, text=t, label=y)
        for i, (t, y) in enumerate(zip(texts, labels))
    )
    return Corpus(samples=samples, label_map=ClassLabelMap(tuple(names)))


@pytest.fixture
def toy_binary():
    # separable: "sweet" marks class 1, "bitter" marks class 0
    texts = [
        "bitter rind", "bitter peel stale", "so bitter much",
        "sweet ripe", "sweet juice sun", "very sweet indeed",
    ]
    return make_corpus(texts, [0, 0, 0, 1, 1, 1], ("sour", "happy"))


@pytest.fixture(scope="module")
def echo_server():
    with MockCompletionServer(behavior="echo",
                              label_names=("Negative", "Positive")) as server:
        yield server


@pytest.fixture(scope="module")
def constant_server():
    with MockCompletionServer(behavior="constant",
                              constant_text="Positive") as server:
        yield server


@pytest.fixture(scope="module")
def gibberish_server():
    with MockCompletionServer(behavior="gibberish") as server:
        yield server


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
