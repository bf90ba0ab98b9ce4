"""Sample-weight machinery for adaptive boosting.

Covers the weighted error rate, the multi-class learner coefficient
(log((1-eps)/eps) + log(c-1), the SAMME form, natural logs), the
exponential weight update with normalization, and the conversion of a
weight distribution into integer per-sample counts for materialization.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Error rates are clamped away from {0, 1} before computing the coefficient
# so a perfect or hopeless learner yields a finite alpha.
EPSILON_CLAMP = 1e-6

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class WeightDistribution:
    """Nonnegative per-sample weights summing to 1."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if np.any(values < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(values.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {values.sum()!r}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RoundStatistics:
    """Error rate, coefficient, and normalizer of one boosting round."""

    epsilon: float
    alpha: float
    z: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon out of [0,1]: {self.epsilon}")
        if self.z <= 0.0:
            raise ValueError(f"normalizer must be positive: {self.z}")


def init_uniform(n: int) -> WeightDistribution:
    """Uniform distribution 1/n, renormalized so the sum is exactly 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    values = np.full(n, 1.0 / n, dtype=np.float64)
    total = values.sum()
    if total != 1.0:
        values /= total
    return WeightDistribution(values)


def clamp_epsilon(epsilon: float) -> float:
    return min(max(epsilon, EPSILON_CLAMP), 1.0 - EPSILON_CLAMP)


def weighted_error(correct: np.ndarray, weights: WeightDistribution) -> float:
    """Total weight of the misclassified samples (correct=False positions)."""
    correct = np.asarray(correct, dtype=bool)
    if len(correct) != weights.n:
        raise ValueError(f"mask length {len(correct)} != weight length {weights.n}")
    return float(weights.values[~correct].sum())


def alpha(epsilon: float, c: int) -> float:
    """Learner coefficient log((1-eps)/eps) + log(c-1), natural logs.

    Positive iff the learner beats random guessing over c classes, i.e.
    eps < (c-1)/c; zero exactly at that boundary. epsilon is clamped to
    [EPSILON_CLAMP, 1-EPSILON_CLAMP] first.
    """
    if c < 2:
        raise ValueError(f"need at least 2 classes, got {c}")
    eps = clamp_epsilon(epsilon)
    return math.log((1.0 - eps) / eps) + math.log(c - 1)


def update_weights(
    weights: WeightDistribution, correct: np.ndarray, alpha: float
) -> tuple[WeightDistribution, float]:
    """Multiply by e^{+alpha} (wrong) / e^{-alpha} (correct), renormalize.

    Returns the new distribution and the normalizer Z (sum of the
    unnormalized updated weights).
    """
    correct = np.asarray(correct, dtype=bool)
    if len(correct) != weights.n:
        raise ValueError(f"mask length {len(correct)} != weight length {weights.n}")
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha}")
    factors = np.where(correct, math.exp(-alpha), math.exp(alpha))
    unnormalized = weights.values * factors
    z = float(unnormalized.sum())
    assert z > 0.0, "all updated weights vanished"
    return WeightDistribution(unnormalized / z), z


def weights_to_counts(
    weights: WeightDistribution, replication: float, seed: int
) -> np.ndarray:
    """Materialize weights as integer per-sample counts.

    Target count for sample i is w_i * n * replication; the fractional
    part is resolved by seeded stochastic rounding. Every sample with
    positive weight keeps at least one copy, and no sample exceeds
    ceil(10 * replication) copies.
    """
    if replication < 1.0:
        raise ValueError(f"replication must be >= 1, got {replication}")
    w = weights.values
    n = weights.n
    targets = w * (n * replication)
    base = np.floor(targets)
    frac = targets - base
    rng = np.random.default_rng(seed)
    counts = base.astype(np.int64) + (rng.random(n) < frac)
    cap = max(1, math.ceil(10.0 * replication))
    np.minimum(counts, cap, out=counts)
    counts[(w > 0) & (counts < 1)] = 1
    return counts


def entropy(weights: WeightDistribution) -> float:
    """Shannon entropy -sum(w ln w) in nats; uniform over n gives ln n."""
    w = weights.values[weights.values > 0]
    return float(-(w * np.log(w)).sum())


def write_weight_snapshot(path, sample_ids, weights: WeightDistribution, round_index: int) -> None:
    """Export one round's weights as CSV rows (sample_id, weight, round)."""
    if len(sample_ids) != weights.n:
        raise ValueError("sample_ids length must match weights")
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "weight", "round"])
        for sid, w in zip(sample_ids, weights.values):
            writer.writerow([sid, repr(float(w)), round_index])


def read_weight_snapshot(path):
    """Read a snapshot written by write_weight_snapshot.

    Returns (sample_ids, weights array, round_index).
    """
    ids, values, round_index = [], [], 0
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["sample_id", "weight", "round"]:
            raise ValueError(f"{path}: unexpected snapshot header {header!r}")
        for row in reader:
            ids.append(int(row[0]))
            values.append(float(row[1]))
            round_index = int(row[2])
    return ids, np.array(values, dtype=np.float64), round_index
