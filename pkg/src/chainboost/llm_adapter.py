"""Prompt construction, label parsing, and a remote completion-API learner.

The prompt layout is fixed and byte-exact:

    {instruction}
    <blank>
    [per shot:  INPUT: {escaped shot text}
                LABEL: {label name}
                <blank>]
    INPUT: {escaped input text}
    LABEL:
    [per chain entry:  Previous round {i}: {label name} (error rate {e:.4f})]

Input and shot texts are escaped onto a single line (backslash, newline and
carriage return become \\\\, \\n, \\r), so distinct (text, chain) pairs
produce distinct prompts and no input can forge a chain line. The chain
block, when present, is the final segment. No trailing newline.
"""

from __future__ import annotations

import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import requests

from .dataset import ClassLabelMap, Corpus
from .errors import ConfigError, LabelParseError, RemoteEndpointError
from .learners import BaseLearner, PredictionResult, register_learner

API_KEY_ENV = "CHAINBOOST_API_KEY"

MAX_SHOTS = 10


def _escape_line(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n").replace("\r", "\\r")


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str
    label_names: tuple
    shots: tuple = ()  # (text, label index) demonstration pairs

    def __post_init__(self):
        if not self.instruction:
            raise ConfigError("prompt instruction must be nonempty")
        names = tuple(self.label_names)
        object.__setattr__(self, "label_names", names)
        if len(names) < 2 or any(not n for n in names):
            raise ConfigError("need >= 2 nonempty label names")
        shots = tuple((str(t), int(l)) for t, l in self.shots)
        object.__setattr__(self, "shots", shots)
        if len(shots) > MAX_SHOTS:
            raise ConfigError(f"at most {MAX_SHOTS} shots, got {len(shots)}")
        for text, label in shots:
            if not 0 <= label < len(names):
                raise ConfigError(f"shot label {label} out of range")


def build_prompt(template: PromptTemplate, text: str,
                 chain: Optional[Sequence] = None) -> str:
    parts = [template.instruction, ""]
    for shot_text, shot_label in template.shots:
        parts.append(f"INPUT: {_escape_line(shot_text)}")
        parts.append(f"LABEL: {template.label_names[shot_label]}")
        parts.append("")
    parts.append(f"INPUT: {_escape_line(text)}")
    parts.append("LABEL:")
    for i, (label, eps) in enumerate(chain or (), start=1):
        parts.append(f"Previous round {i}: {template.label_names[int(label)]} "
                     f"(error rate {float(eps):.4f})")
    return "\n".join(parts)


def parse_label(completion: str, label_map: ClassLabelMap) -> int:
    """Whole-word, case-insensitive scan for label names.

    Exactly one distinct name may occur; repeats of that name are fine
    (first occurrence wins for its position, the index is the same).
    """
    found = {}
    for index, name in enumerate(label_map.names):
        pattern = r"(?<![0-9A-Za-z])" + re.escape(name) + r"(?![0-9A-Za-z])"
        m = re.search(pattern, completion, re.IGNORECASE)
        if m:
            found[index] = m.start()
    if not found:
        raise LabelParseError(f"no label name found in completion {completion!r}")
    if len(found) > 1:
        names = [label_map.names[i] for i in sorted(found, key=found.get)]
        raise LabelParseError(f"ambiguous completion mentions {names}: {completion!r}")
    return next(iter(found))


@dataclass(frozen=True)
class RemoteLearnerConfig:
    endpoint: str
    model: str = "default"
    timeout: float = 10.0
    retries: int = 2
    temperature: float = 0.0
    max_tokens: int = 16
    max_in_flight: int = 4

    def __post_init__(self):
        if self.timeout <= 0:
            raise ConfigError("timeout must be > 0")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.retries < 0 or self.max_in_flight < 1:
            raise ConfigError("retries must be >= 0 and max_in_flight >= 1")


class RemoteLearner(BaseLearner):
    """Learner that classifies by prompting a completion endpoint.

    fit() only picks demonstration shots (no parameters to train): in rank
    mode the highest-weight sample of each class, in random mode a seeded
    per-class draw. predict() builds the prompt, calls the endpoint with
    retries, and parses the completion; unparsable completions score as
    uniform over classes and are tallied in `unparsable_count`, which never
    influences any prediction.
    """

    kind = "remote_llm"

    def __init__(self, config: RemoteLearnerConfig, template: PromptTemplate,
                 shots_per_class: int = 0, shot_mode: str = "rank", seed: int = 0):
        if shot_mode not in ("rank", "random"):
            raise ConfigError(f"shot_mode must be 'rank' or 'random', got {shot_mode!r}")
        if shots_per_class < 0:
            raise ConfigError("shots_per_class must be >= 0")
        self.config = config
        self.template = template
        self.shots_per_class = shots_per_class
        self.shot_mode = shot_mode
        self.seed = seed
        self._counter_lock = threading.Lock()
        self.unparsable_count = 0

    def fit(self, corpus: Corpus, weights=None, chain=None) -> "RemoteLearner":
        if corpus.label_map.names != self.template.label_names:
            raise ConfigError("corpus label names do not match the prompt template")
        if self.shots_per_class == 0:
            return self
        n = len(corpus)
        w = np.full(n, 1.0 / n) if weights is None else weights.values
        shots = []
        rng = np.random.default_rng([self.seed, 97]) if self.shot_mode == "random" else None
        for cls in range(corpus.label_map.c):
            members = [i for i, s in enumerate(corpus.samples) if s.label == cls]
            if not members:
                continue
            if self.shot_mode == "rank":
                # stable: heaviest first, corpus order breaking ties
                members.sort(key=lambda i: (-w[i], i))
                chosen = members[: self.shots_per_class]
            else:
                take = min(self.shots_per_class, len(members))
                chosen = [members[j] for j in rng.choice(len(members), size=take, replace=False)]
            shots.extend((corpus.samples[i].text, cls) for i in chosen)
        self.template = PromptTemplate(
            instruction=self.template.instruction,
            label_names=self.template.label_names,
            shots=tuple(shots),
        )
        return self

    def _complete(self, prompt: str) -> str:
        payload = {
            "model": self.config.model,
            "prompt": prompt,
            "max_tokens": self.config.max_tokens,
            "temperature": self.config.temperature,
        }
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error = None
        for _ in range(self.config.retries + 1):
            try:
                resp = requests.post(self.config.endpoint, json=payload,
                                     headers=headers, timeout=self.config.timeout)
                resp.raise_for_status()
                choices = resp.json()["choices"]
                return str(choices[0]["text"])
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise RemoteEndpointError(
            f"endpoint {self.config.endpoint} failed after "
            f"{self.config.retries + 1} attempts: {last_error}")

    def predict(self, text, chain=None) -> PredictionResult:
        prompt = build_prompt(self.template, text, chain)
        completion = self._complete(prompt)
        c = len(self.template.label_names)
        label_map = ClassLabelMap(names=self.template.label_names)
        try:
            label = parse_label(completion, label_map)
        except LabelParseError:
            with self._counter_lock:
                self.unparsable_count += 1
            return PredictionResult.from_scores(np.full(c, 1.0 / c))
        scores = np.zeros(c)
        scores[label] = 1.0
        return PredictionResult(label=label, scores=scores)

    def predict_many(self, texts, chains=None):
        if chains is not None and len(chains) != len(texts):
            raise ValueError("chains length must match number of texts")
        jobs = [(t, None if chains is None else chains[i]) for i, t in enumerate(texts)]
        with ThreadPoolExecutor(max_workers=self.config.max_in_flight) as pool:
            return list(pool.map(lambda job: self.predict(job[0], job[1]), jobs))

    def to_state(self) -> dict:
        return {
            "config": {
                "endpoint": self.config.endpoint,
                "model": self.config.model,
                "timeout": self.config.timeout,
                "retries": self.config.retries,
                "temperature": self.config.temperature,
                "max_tokens": self.config.max_tokens,
                "max_in_flight": self.config.max_in_flight,
            },
            "instruction": self.template.instruction,
            "label_names": list(self.template.label_names),
            "shots": [[t, l] for t, l in self.template.shots],
            "shots_per_class": self.shots_per_class,
            "shot_mode": self.shot_mode,
            "seed": self.seed,
        }

    @classmethod
    def from_state(cls, state: dict) -> "RemoteLearner":
        template = PromptTemplate(
            instruction=state["instruction"],
            label_names=tuple(state["label_names"]),
            shots=tuple((t, int(l)) for t, l in state["shots"]),
        )
        return cls(RemoteLearnerConfig(**state["config"]), template,
                   shots_per_class=state["shots_per_class"],
                   shot_mode=state["shot_mode"], seed=state["seed"])


def _remote_factory(featurizer, params, seed):
    if "endpoint" not in params:
        raise ConfigError("remote_llm learner needs an 'endpoint'")
    if "instruction" not in params or "label_names" not in params:
        raise ConfigError("remote_llm learner needs 'instruction' and 'label_names'")
    config = RemoteLearnerConfig(
        endpoint=params["endpoint"],
        model=params.get("model", "default"),
        timeout=params.get("timeout", 10.0),
        retries=params.get("retries", 2),
        temperature=params.get("temperature", 0.0),
        max_tokens=params.get("max_tokens", 16),
        max_in_flight=params.get("max_in_flight", 4),
    )
    template = PromptTemplate(
        instruction=params["instruction"],
        label_names=tuple(params["label_names"]),
        shots=tuple(tuple(s) for s in params.get("shots", ())),
    )
    return RemoteLearner(config, template,
                         shots_per_class=params.get("shots_per_class", 0),
                         shot_mode=params.get("shot_mode", "rank"), seed=seed)


register_learner(RemoteLearner, _remote_factory)
