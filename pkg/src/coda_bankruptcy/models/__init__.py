from .forest import DecisionTree, Forest, default_mtry, fit_forest, forest_votes, predict_forest, variable_importance
from .knn import DEFAULT_K_GRID, KnnModel, KnnTuning, build_knn, knn_classify, tune_knn
from .logistic import LogisticModel, fit_logistic, predict_logistic, predict_proba

__all__ = [
    "DecisionTree",
    "Forest",
    "default_mtry",
    "fit_forest",
    "forest_votes",
    "predict_forest",
    "variable_importance",
    "DEFAULT_K_GRID",
    "KnnModel",
    "KnnTuning",
    "build_knn",
    "knn_classify",
    "tune_knn",
    "LogisticModel",
    "fit_logistic",
    "predict_logistic",
    "predict_proba",
]
