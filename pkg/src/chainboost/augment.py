"""Materialize a re-weighted corpus by generating extra samples.

Weight increases are realized as additional samples similar to the
up-weighted original; weight decreases never remove a sample. Variants
carry provenance (origin=augmented, parent_id) so evaluation can exclude
them and audits can trace them.
"""

from __future__ import annotations

import logging
import os
from dataclasses import replace
from typing import Protocol

import numpy as np
import requests

from .dataset import ORIGIN_AUGMENTED, Corpus, LabeledSample
from .errors import AugmenterError

log = logging.getLogger(__name__)

API_KEY_ENV = "CHAINBOOST_API_KEY"


class Augmenter(Protocol):
    def generate(self, sample: LabeledSample, k: int, seed: int) -> list[LabeledSample]:
        """Return k variants of the sample: origin=augmented, same label,
        parent_id=sample.id, nonempty text. Sample ids are placeholders;
        materialize() assigns fresh ones."""
        ...


def _variant(sample: LabeledSample, text: str) -> LabeledSample:
    return LabeledSample(
        id=-1, text=text, label=sample.label, origin=ORIGIN_AUGMENTED, parent_id=sample.id
    )


class PerturbationAugmenter:
    """Deterministic local augmenter: seeded token dropout + adjacent swaps.

    A stand-in for a generative paraphraser that keeps training runnable
    offline. Never produces empty text (falls back to the original).
    """

    def __init__(self, dropout_rate: float = 0.1, swap_rate: float = 0.1):
        if not 0.0 <= dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0,1), got {dropout_rate}")
        if not 0.0 <= swap_rate < 1.0:
            raise ValueError(f"swap_rate must be in [0,1), got {swap_rate}")
        self.dropout_rate = dropout_rate
        self.swap_rate = swap_rate

    def generate(self, sample: LabeledSample, k: int, seed: int) -> list[LabeledSample]:
        if k <= 0:
            return []
        if self.dropout_rate == 0.0 and self.swap_rate == 0.0:
            return [_variant(sample, sample.text) for _ in range(k)]
        rng = np.random.default_rng([seed, sample.id])
        tokens = sample.text.split()
        variants = []
        for _ in range(k):
            kept = [t for t in tokens if rng.random() >= self.dropout_rate]
            if not kept:
                variants.append(_variant(sample, sample.text))
                continue
            for j in range(len(kept) - 1):
                if rng.random() < self.swap_rate:
                    kept[j], kept[j + 1] = kept[j + 1], kept[j]
            text = " ".join(kept)
            variants.append(_variant(sample, text if text else sample.text))
        return variants


def perturbation_augmenter(dropout_rate: float = 0.1, swap_rate: float = 0.1) -> PerturbationAugmenter:
    return PerturbationAugmenter(dropout_rate, swap_rate)


class RemoteAugmenter:
    """Augmenter backed by a completion-style HTTP endpoint.

    Sends {"prompt": rendered template, "n": k} and expects
    {"choices": [{"text": ...}, ...]}; one variant per nonempty response
    line. Degrades to the local perturbation augmenter when the endpoint
    stays unreachable or returns nothing usable, so training never blocks
    on the network.
    """

    def __init__(self, endpoint: str, template: str, timeout: float = 10.0, retries: int = 2):
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        self.endpoint = endpoint
        self.template = template
        self.timeout = timeout
        self.retries = retries
        self._fallback = PerturbationAugmenter()

    def _request_lines(self, sample: LabeledSample, k: int) -> list[str]:
        prompt = self.template.format(text=sample.text, n=k)
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    self.endpoint,
                    json={"prompt": prompt, "n": k},
                    headers=headers,
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                choices = resp.json().get("choices", [])
                lines = []
                for choice in choices:
                    for line in str(choice.get("text", "")).splitlines():
                        if line.strip():
                            lines.append(line.strip())
                return lines[:k]
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        log.warning("augmentation endpoint %s failed (%s); falling back to local perturbation",
                    self.endpoint, last_error)
        return []

    def generate(self, sample: LabeledSample, k: int, seed: int) -> list[LabeledSample]:
        if k <= 0:
            return []
        variants = [_variant(sample, line) for line in self._request_lines(sample, k)]
        if len(variants) < k:
            variants.extend(self._fallback.generate(sample, k - len(variants), seed))
        return variants


def remote_augmenter(endpoint: str, template: str, timeout: float = 10.0) -> RemoteAugmenter:
    return RemoteAugmenter(endpoint, template, timeout)


def materialize(corpus: Corpus, counts, augmenter: Augmenter, seed: int) -> Corpus:
    """Expand the corpus so sample i appears once plus (counts[i]-1) variants.

    Originals keep their order and ids; variants follow, grouped by parent
    in corpus order, with fresh sequential ids. Output size equals
    sum(counts).
    """
    counts = np.asarray(counts, dtype=np.int64)
    if len(counts) != len(corpus):
        raise ValueError(f"counts length {len(counts)} != corpus size {len(corpus)}")
    if np.any(counts < 1):
        raise ValueError("every count must be >= 1")
    next_id = max(s.id for s in corpus.samples) + 1
    augmented: list[LabeledSample] = []
    for sample, count in zip(corpus.samples, counts):
        if count <= 1:
            continue
        try:
            variants = augmenter.generate(sample, int(count) - 1, seed)
        except Exception as exc:
            raise AugmenterError(str(exc), sample_id=sample.id) from exc
        if len(variants) != count - 1:
            raise AugmenterError(
                f"augmenter returned {len(variants)} variants, wanted {count - 1}",
                sample_id=sample.id,
            )
        for v in variants:
            augmented.append(replace(v, id=next_id))
            next_id += 1
    return Corpus(samples=corpus.samples + tuple(augmented), label_map=corpus.label_map)
