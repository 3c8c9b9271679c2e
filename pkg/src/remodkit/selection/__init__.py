"""Algorithm selection: labels, instance space, SVM footprints and recommendation."""

from .featuresel import FeatureGAParams, FeatureSelection, ga_select_features
from .footprint import (
    DEFAULT_THRESHOLD,
    METRICS_HEADER,
    NONE_LABEL,
    ConfigFootprint,
    FootprintModel,
    Labels,
    PerformanceTable,
    Recommendation,
    fit_footprint,
    label_runs,
    recommend,
    train_footprints,
)
from .pca import InstanceSpace, pca_project
from .svm import SVMClassifier, TuneResult, train_svm, tune_and_score

__all__ = [
    "DEFAULT_THRESHOLD", "METRICS_HEADER", "NONE_LABEL",
    "ConfigFootprint", "FeatureGAParams", "FeatureSelection", "FootprintModel", "InstanceSpace",
    "Labels", "PerformanceTable", "Recommendation", "SVMClassifier", "TuneResult",
    "fit_footprint", "ga_select_features", "label_runs", "pca_project", "recommend",
    "train_footprints", "train_svm", "tune_and_score",
]
