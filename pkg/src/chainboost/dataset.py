"""Labeled text corpora: loading, validation, stratified splitting, serialization.

Label indices are assigned by first appearance in the file, embedded in the
corpus, and persisted with any trained model, so inference never re-infers
them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, DataFormatError

ORIGIN_ORIGINAL = "original"
ORIGIN_AUGMENTED = "augmented"

CORPUS_FORMATS = ("tsv", "csv", "jsonl")

CORPUS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClassLabelMap:
    """Ordered distinct label names; index in ``names`` is the class index."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 2:
            raise DataFormatError(f"fewer than 2 classes (got {len(self.names)})")
        if len(set(self.names)) != len(self.names):
            raise DataFormatError("duplicate label names")

    @property
    def c(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class LabeledSample:
    id: int
    text: str
    label: int
    origin: str = ORIGIN_ORIGINAL
    parent_id: Optional[int] = None

    def __post_init__(self):
        if not self.text:
            raise DataFormatError(f"sample {self.id}: empty text")
        if self.origin not in (ORIGIN_ORIGINAL, ORIGIN_AUGMENTED):
            raise DataFormatError(f"sample {self.id}: bad origin {self.origin!r}")
        if self.origin == ORIGIN_AUGMENTED and self.parent_id is None:
            raise DataFormatError(f"sample {self.id}: augmented sample without parent_id")


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered collection of labeled samples plus the label map."""

    samples: tuple[LabeledSample, ...]
    label_map: ClassLabelMap

    def __post_init__(self):
        ids = set()
        originals = set()
        for s in self.samples:
            if s.id in ids:
                raise DataFormatError(f"duplicate sample id {s.id}")
            ids.add(s.id)
            if s.origin == ORIGIN_ORIGINAL:
                originals.add(s.id)
            if not (0 <= s.label < self.label_map.c):
                raise DataFormatError(f"sample {s.id}: label {s.label} out of range")
        for s in self.samples:
            if s.origin == ORIGIN_AUGMENTED and s.parent_id not in originals:
                raise DataFormatError(
                    f"sample {s.id}: parent_id {s.parent_id} is not an original sample"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def ids(self) -> list[int]:
        return [s.id for s in self.samples]

    def class_counts(self) -> np.ndarray:
        counts = np.zeros(self.label_map.c, dtype=np.int64)
        for s in self.samples:
            counts[s.label] += 1
        return counts


def _records_from_delimited(path: Path, delimiter: str, has_header: bool):
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row:
                continue
            if len(row) < 2:
                raise DataFormatError("expected two columns (text, label)", line=lineno)
            yield lineno, row[0], row[1]


def _records_from_jsonl(path: Path):
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict) or "text" not in obj:
                raise DataFormatError('missing "text" field', line=lineno)
            if "label" not in obj:
                raise DataFormatError('missing "label" field', line=lineno)
            yield lineno, obj["text"], obj["label"]


def load_corpus(path, format: str, has_header: bool = False) -> Corpus:
    """Load a two-field (text, label) corpus in tsv, csv, or jsonl format.

    The label map is built from distinct labels in order of first
    appearance. Raises DataFormatError with a line number for malformed
    records, and ConfigError for unreadable files or unknown formats.
    """
    path = Path(path)
    if format == "tsv":
        records = _records_from_delimited(path, "\t", has_header)
    elif format == "csv":
        records = _records_from_delimited(path, ",", has_header)
    elif format == "jsonl":
        records = _records_from_jsonl(path)
    else:
        raise ConfigError(f"corpus format must be one of {CORPUS_FORMATS}, got {format!r}")

    names: list[str] = []
    index: dict[str, int] = {}
    samples: list[LabeledSample] = []
    try:
        for lineno, text, label in records:
            if not isinstance(text, str) or not text:
                raise DataFormatError("empty or non-string text field", line=lineno)
            label = str(label)
            if not label:
                raise DataFormatError("empty label field", line=lineno)
            if label not in index:
                index[label] = len(names)
                names.append(label)
            samples.append(LabeledSample(id=len(samples), text=text, label=index[label]))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc

    if not samples:
        raise DataFormatError(f"empty corpus: {path}")
    return Corpus(samples=tuple(samples), label_map=ClassLabelMap(tuple(names)))


def save_corpus(corpus: Corpus, path) -> None:
    """Write the versioned corpus container (JSON, embeds the label map)."""
    payload = {
        "format_version": CORPUS_FORMAT_VERSION,
        "label_names": list(corpus.label_map.names),
        "samples": [
            {
                "id": s.id,
                "text": s.text,
                "label": s.label,
                "origin": s.origin,
                "parent_id": s.parent_id,
            }
            for s in corpus.samples
        ],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8"
    )


def load_saved_corpus(path) -> Corpus:
    """Load a container written by save_corpus."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc.msg}") from exc
    version = payload.get("format_version")
    if version != CORPUS_FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported corpus format version {version!r}")
    label_map = ClassLabelMap(tuple(payload["label_names"]))
    samples = tuple(
        LabeledSample(
            id=rec["id"],
            text=rec["text"],
            label=rec["label"],
            origin=rec.get("origin", ORIGIN_ORIGINAL),
            parent_id=rec.get("parent_id"),
        )
        for rec in payload["samples"]
    )
    return Corpus(samples=samples, label_map=label_map)


def stratified_split(corpus: Corpus, holdout_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Split into (rest, holdout), stratified by class.

    Per-class holdout counts are round(class_count * holdout_fraction)
    with a minimum of 1; the split is deterministic for a fixed seed and
    partitions the corpus. Requires at least 2 samples per class.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ConfigError(f"holdout_fraction must be in (0,1), got {holdout_fraction}")
    by_class: dict[int, list[int]] = {}
    for pos, s in enumerate(corpus.samples):
        by_class.setdefault(s.label, []).append(pos)
    rng = np.random.default_rng(seed)
    holdout_pos: set[int] = set()
    for label in sorted(by_class):
        positions = by_class[label]
        if len(positions) < 2:
            raise ConfigError(
                f"class {corpus.label_map.names[label]!r} has {len(positions)} sample(s); "
                "need at least 2 to split"
            )
        k = max(1, round(len(positions) * holdout_fraction))
        k = min(k, len(positions) - 1)
        chosen = rng.permutation(len(positions))[:k]
        holdout_pos.update(positions[i] for i in chosen)
    rest = tuple(s for pos, s in enumerate(corpus.samples) if pos not in holdout_pos)
    held = tuple(s for pos, s in enumerate(corpus.samples) if pos in holdout_pos)
    return (
        Corpus(samples=rest, label_map=corpus.label_map),
        Corpus(samples=held, label_map=corpus.label_map),
    )
