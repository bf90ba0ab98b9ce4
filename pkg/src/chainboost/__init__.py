"""chainboost: adaptive boosting for text classification.

Trains an ensemble of weak text classifiers by iterative re-weighting,
realizes weight increases as augmented training samples, and chains the
learners at inference time so each one sees its predecessors' predictions
and error rates. Hot kernels run through a compiled extension when built,
with a bit-identical pure-Python fallback.
"""

__version__ = "0.1.0"

from .boosting import BoostConfig, BoostRound, EnsembleModel, TrainingTelemetry, train
from .dataset import ClassLabelMap, Corpus, LabeledSample, load_corpus, stratified_split
from .ensemble import (ChainContext, evaluate, predict_recurrent,
                       predict_weighted_vote)
from .errors import (AugmenterError, ChainboostError, CompatibilityError,
                     ConfigError, DataFormatError, LabelParseError,
                     PartialDataError, RemoteEndpointError, TrainingError)
from .learners import (BaseLearner, Featurizer, LogisticLearner,
                       NaiveBayesLearner, PredictionResult, StumpLearner,
                       create_learner)
from .llm_adapter import (PromptTemplate, RemoteLearner, RemoteLearnerConfig,
                          build_prompt, parse_label)
from .metrics import MetricsReport, accuracy, confusion, macro_f1, report
from .model_io import load_model, save_model
from .weights import (WeightDistribution, alpha, clamp_epsilon, init_uniform,
                      update_weights, weighted_error, weights_to_counts)

__all__ = [
    "__version__",
    "BoostConfig", "BoostRound", "EnsembleModel", "TrainingTelemetry", "train",
    "ClassLabelMap", "Corpus", "LabeledSample", "load_corpus", "stratified_split",
    "ChainContext", "evaluate", "predict_recurrent", "predict_weighted_vote",
    "AugmenterError", "ChainboostError", "CompatibilityError", "ConfigError",
    "DataFormatError", "LabelParseError", "PartialDataError",
    "RemoteEndpointError", "TrainingError",
    "BaseLearner", "Featurizer", "LogisticLearner", "NaiveBayesLearner",
    "PredictionResult", "StumpLearner", "create_learner",
    "PromptTemplate", "RemoteLearner", "RemoteLearnerConfig", "build_prompt",
    "parse_label",
    "MetricsReport", "accuracy", "confusion", "macro_f1", "report",
    "load_model", "save_model",
    "WeightDistribution", "alpha", "clamp_epsilon", "init_uniform",
    "update_weights", "weighted_error", "weights_to_counts",
]
