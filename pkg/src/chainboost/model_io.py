"""Versioned JSON model container.

Numpy arrays are embedded as base64 of their raw bytes (dtype and shape
recorded), so a loaded model is bit-for-bit the trained one and two
identical training runs serialize to identical bytes.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from . import llm_adapter  # noqa: F401  (registers the remote learner kind)
from .boosting import BoostRound, EnsembleModel
from .dataset import ClassLabelMap
from .errors import CompatibilityError
from .learners import learner_from_state

MODEL_FORMAT = "chainboost-model"
MODEL_FORMAT_VERSION = 1

_ND_TAG = "__nd__"


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {_ND_TAG: {
            "dtype": obj.dtype.str,
            "shape": list(obj.shape),
            "data": base64.b64encode(np.ascontiguousarray(obj).tobytes()).decode("ascii"),
        }}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if set(obj) == {_ND_TAG}:
            spec = obj[_ND_TAG]
            arr = np.frombuffer(base64.b64decode(spec["data"]), dtype=np.dtype(spec["dtype"]))
            return arr.reshape(spec["shape"]).copy()
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_bytes(model: EnsembleModel) -> bytes:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "label_names": list(model.label_map.names),
        "featurizer": _encode(model.featurizer_config),
        "rounds": [
            {
                "round_index": rnd.round_index,
                "epsilon": rnd.epsilon,
                "alpha": rnd.alpha,
                "kind": rnd.learner.kind,
                "state": _encode(rnd.learner.to_state()),
            }
            for rnd in model.rounds
        ],
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def save_model(model: EnsembleModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> EnsembleModel:
    with open(path, "rb") as fh:
        try:
            doc = json.loads(fh.read().decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise CompatibilityError(f"{path} is not a model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise CompatibilityError(f"{path} is not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise CompatibilityError(
            f"model version {doc.get('version')} unsupported "
            f"(this build reads version {MODEL_FORMAT_VERSION})")
    label_map = ClassLabelMap(names=tuple(doc["label_names"]))
    rounds = tuple(
        BoostRound(
            learner=learner_from_state(entry["kind"], _decode(entry["state"])),
            epsilon=float(entry["epsilon"]),
            alpha=float(entry["alpha"]),
            round_index=int(entry["round_index"]),
        )
        for entry in doc["rounds"]
    )
    return EnsembleModel(rounds=rounds, label_map=label_map,
                         featurizer_config=_decode(doc["featurizer"]))
