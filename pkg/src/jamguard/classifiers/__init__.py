"""The six detectors compared for jamming detection and localization."""

from .core import (
    DEFAULTS,
    KINDS,
    ClassifierSpec,
    ModelError,
    TrainedModel,
    fit,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    predict_batch,
    save_model,
)

__all__ = [
    "DEFAULTS",
    "KINDS",
    "ClassifierSpec",
    "ModelError",
    "TrainedModel",
    "fit",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "predict_batch",
    "save_model",
]
