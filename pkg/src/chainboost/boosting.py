"""The boosting loop: re-weight, materialize, fit, score, repeat.

Each round fits a fresh learner on the current view of the training data
(count-materialized through the augmenter by default, or direct fractional
weights), measures its weighted error on the original corpus, converts
that error into a coefficient, and re-weights the samples so the next
round concentrates on the mistakes. Chained training additionally feeds
each round the previous round's predictions, matching what inference does.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import weights as weights_mod
from .augment import materialize, perturbation_augmenter
from .dataset import ClassLabelMap, Corpus, stratified_split
from .ensemble import ChainContext, evaluate
from .errors import ChainboostError, ConfigError, TrainingError
from .learners import Featurizer, create_learner
from . import llm_adapter  # noqa: F401  (registers the remote learner kind)

WEIGHTING_MODES = ("materialize", "direct")

_SCORE_FLOOR = 1e-15


@dataclass(frozen=True)
class BoostConfig:
    k_max: int = 7
    learner_kind: str = "naive_bayes"
    chain_in_training: bool = True
    replication: float = 1.0
    holdout_fraction: float = 0.1
    patience: int = 2
    seed: int = 0
    weighting: str = "materialize"
    binary_bound_form: bool = False
    featurizer: dict = field(default_factory=dict)
    learner_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k_max < 1:
            raise ConfigError(f"k_max must be >= 1, got {self.k_max}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.replication < 1:
            raise ConfigError(f"replication must be >= 1, got {self.replication}")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError(
                f"holdout_fraction must be in [0, 1), got {self.holdout_fraction}")
        if self.weighting not in WEIGHTING_MODES:
            raise ConfigError(f"weighting must be one of {WEIGHTING_MODES}")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")


@dataclass(frozen=True)
class BoostRound:
    learner: object
    epsilon: float
    alpha: float
    round_index: int


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    epsilon: float
    alpha: float
    z: float
    train_loss: float
    holdout_accuracy: Optional[float]


@dataclass
class TrainingTelemetry:
    num_classes: int
    bound_form: bool
    rounds: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # [0] = initial uniform weights
    sample_ids: tuple = ()
    train_size: int = 0
    holdout_size: int = 0
    stopped_reason: str = ""
    best_round: int = 0  # 0 means no holdout, model keeps every round

    TELEMETRY_FILE = "telemetry.csv"

    def write(self, outdir) -> None:
        os.makedirs(outdir, exist_ok=True)
        path = os.path.join(outdir, self.TELEMETRY_FILE)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "epsilon", "alpha", "z", "train_loss", "holdout_acc"])
            for r in self.rounds:
                writer.writerow([
                    r.round_index, repr(r.epsilon), repr(r.alpha), repr(r.z),
                    repr(r.train_loss),
                    "" if r.holdout_accuracy is None else repr(r.holdout_accuracy),
                ])
        for k, snap in enumerate(self.snapshots):
            weights_mod.write_weight_snapshot(
                os.path.join(outdir, f"weights_round_{k}.csv"),
                self.sample_ids, snap, k)

    @classmethod
    def read(cls, outdir) -> "TrainingTelemetry":
        path = os.path.join(outdir, cls.TELEMETRY_FILE)
        if not os.path.exists(path):
            raise ConfigError(f"no telemetry at {path}")
        tele = cls(num_classes=0, bound_form=False)
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                tele.rounds.append(RoundRecord(
                    round_index=int(row["round"]),
                    epsilon=float(row["epsilon"]),
                    alpha=float(row["alpha"]),
                    z=float(row["z"]),
                    train_loss=float(row["train_loss"]),
                    holdout_accuracy=float(row["holdout_acc"]) if row["holdout_acc"] else None,
                ))
        k = 0
        while True:
            snap_path = os.path.join(outdir, f"weights_round_{k}.csv")
            if not os.path.exists(snap_path):
                break
            ids, w, _ = weights_mod.read_weight_snapshot(snap_path)
            tele.snapshots.append(weights_mod.WeightDistribution(w))
            tele.sample_ids = tuple(ids)
            k += 1
        tele.train_size = len(tele.sample_ids)
        return tele


@dataclass(frozen=True)
class EnsembleModel:
    rounds: tuple
    label_map: ClassLabelMap
    featurizer_config: dict
    telemetry: Optional[TrainingTelemetry] = None

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise ChainboostError("a model needs at least one round")
        for i, rnd in enumerate(self.rounds, start=1):
            if rnd.round_index != i:
                raise ChainboostError(
                    f"round indices must run 1..{len(self.rounds)}, found {rnd.round_index}")

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _build_featurizer(config: BoostConfig, c: int) -> Featurizer:
    opts = dict(config.featurizer)
    unknown = set(opts) - {"dim", "mode", "lowercase", "signed"}
    if unknown:
        raise ConfigError(f"unknown featurizer options: {sorted(unknown)}")
    # logistic works best with signed hashing; counts-based learners need
    # nonnegative values
    opts.setdefault("signed", config.learner_kind == "logistic")
    return Featurizer(
        dim=opts.get("dim", 32768), mode=opts.get("mode", "bag_of_words"),
        lowercase=opts.get("lowercase", True), signed=opts["signed"], num_classes=c)


def _weighted_ce(results, labels, w: np.ndarray) -> float:
    loss = 0.0
    for res, y, wi in zip(results, labels, w):
        loss += float(wi) * -math.log(max(float(res.scores[int(y)]), _SCORE_FLOOR))
    return loss


def train(corpus: Corpus, config: BoostConfig, augmenter=None) -> EnsembleModel:
    """Run up to k_max boosting rounds and return the accepted ones.

    Stops early when a round's error reaches the random-guessing bar
    (c-1)/c (that round is rejected) or when holdout accuracy has not
    improved for `patience` consecutive rounds.
    """
    c = corpus.label_map.c
    if config.binary_bound_form and c != 2:
        raise ConfigError("binary_bound_form requires a 2-class corpus")
    if augmenter is None:
        augmenter = perturbation_augmenter()

    if config.holdout_fraction > 0.0:
        train_corpus, holdout = stratified_split(
            corpus, config.holdout_fraction, config.seed)
    else:
        train_corpus, holdout = corpus, None

    n = len(train_corpus)
    texts = train_corpus.texts()
    labels = train_corpus.labels()
    w = weights_mod.init_uniform(n)
    chains = [ChainContext() for _ in range(n)]
    chain_by_id = {s.id: chains[i] for i, s in enumerate(train_corpus.samples)}

    telemetry = TrainingTelemetry(
        num_classes=c, bound_form=config.binary_bound_form,
        sample_ids=tuple(train_corpus.ids()), train_size=n,
        holdout_size=0 if holdout is None else len(holdout))
    telemetry.snapshots.append(w)

    base_featurizer_config = _build_featurizer(config, c).to_config()
    rounds = []
    random_bar = (c - 1) / c
    best_holdout = -math.inf
    best_k = 0
    stall = 0
    stopped_reason = "k_max"
    last_raw_epsilon = None

    for k in range(1, config.k_max + 1):
        featurizer = _build_featurizer(config, c)
        learner = create_learner(config.learner_kind, featurizer,
                                 config.learner_params, seed=_derive_seed(config.seed, k, 3))
        round_chains = chains if config.chain_in_training else None

        if config.weighting == "materialize":
            counts = weights_mod.weights_to_counts(
                w, config.replication, _derive_seed(config.seed, k, 11))
            expanded = materialize(train_corpus, counts, augmenter,
                                   _derive_seed(config.seed, k, 13))
            if config.chain_in_training:
                fit_chains = [
                    chain_by_id[s.parent_id if s.parent_id is not None else s.id]
                    for s in expanded.samples
                ]
            else:
                fit_chains = None
            try:
                learner.fit(expanded, weights=None, chain=fit_chains)
            except ChainboostError as exc:
                raise TrainingError(f"round {k}: {exc}") from exc
        else:
            try:
                learner.fit(train_corpus, weights=w, chain=round_chains)
            except ChainboostError as exc:
                raise TrainingError(f"round {k}: {exc}") from exc

        results = learner.predict_many(texts, round_chains)
        correct = np.array([res.label == y for res, y in zip(results, labels)], dtype=bool)
        raw_epsilon = weights_mod.weighted_error(correct, w)
        last_raw_epsilon = raw_epsilon
        if raw_epsilon >= random_bar:
            stopped_reason = "rejected_round"
            break

        epsilon = weights_mod.clamp_epsilon(raw_epsilon)
        if config.binary_bound_form:
            alpha_k = 0.5 * math.log((1.0 - epsilon) / epsilon)
        else:
            alpha_k = weights_mod.alpha(epsilon, c)
        w, z = weights_mod.update_weights(w, correct, alpha_k)
        rounds.append(BoostRound(learner=learner, epsilon=epsilon,
                                 alpha=alpha_k, round_index=k))
        telemetry.snapshots.append(w)

        holdout_acc = None
        if holdout is not None:
            interim = EnsembleModel(rounds=tuple(rounds), label_map=corpus.label_map,
                                    featurizer_config=base_featurizer_config)
            holdout_acc = evaluate(interim, holdout, mode="recurrent").accuracy

        telemetry.rounds.append(RoundRecord(
            round_index=k, epsilon=epsilon, alpha=alpha_k, z=z,
            train_loss=_weighted_ce(results, labels, telemetry.snapshots[-2].values),
            holdout_accuracy=holdout_acc))

        # the next round's learner sees this round's predictions
        chains = [ctx.extended(res.label, epsilon) for ctx, res in zip(chains, results)]
        chain_by_id = {s.id: chains[i] for i, s in enumerate(train_corpus.samples)}

        if holdout_acc is not None:
            if holdout_acc > best_holdout:
                best_holdout = holdout_acc
                best_k = k
                stall = 0
            else:
                stall += 1
                if stall >= config.patience:
                    stopped_reason = "early_stop"
                    break

    if not rounds:
        raise TrainingError(
            f"no round beat random guessing: first-round error {last_raw_epsilon:.4f} "
            f">= {random_bar:.4f} with {c} classes")

    # Early stopping returns the chain as of its best holdout score, not
    # whatever the last trained round left behind; boosting past the
    # useful depth can degrade sharply. Telemetry keeps every round.
    if holdout is not None:
        rounds = rounds[:best_k]
        telemetry.best_round = best_k

    telemetry.stopped_reason = stopped_reason
    return EnsembleModel(rounds=tuple(rounds), label_map=corpus.label_map,
                         featurizer_config=base_featurizer_config, telemetry=telemetry)


def training_error_bound(telemetry: TrainingTelemetry) -> float:
    """Product of the per-round normalizers; on a binary run with the
    bound-form update this upper-bounds the weighted-vote training error."""
    if not telemetry.rounds:
        raise ChainboostError("telemetry has no rounds")
    if telemetry.num_classes != 2:
        raise ChainboostError(
            f"the error bound applies to 2-class runs, this one has {telemetry.num_classes}")
    bound = 1.0
    for r in telemetry.rounds:
        bound *= r.z
    return bound
