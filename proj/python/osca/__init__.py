from ._osca import (
    ConfigError,
    DomainError,
    IoError,
    OscaError,
    ShapeError,
    TrainingError,
    ValidationError,
    compose,
    confusion,
    corpus_stats,
    corrupt_history,
    evaluate,
    frame_labels,
    inverse_of,
    predict_corpus,
    run,
    state_classes,
    topk_mean_accuracy,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "IoError",
    "OscaError",
    "ShapeError",
    "TrainingError",
    "ValidationError",
    "compose",
    "confusion",
    "corpus_stats",
    "corrupt_history",
    "evaluate",
    "frame_labels",
    "inverse_of",
    "predict_corpus",
    "run",
    "state_classes",
    "topk_mean_accuracy",
]
