from .bench import BenchRow, benchmark, rows_to_csv, warmup
from .cv import FoldConfigError, MacroModel, fit_cv, fold_indices
from .models import ALL_KINDS, KNN, RBF, BayesianRidge, PredictorKind, RBFEnsemble, Ridge, make_predictor
from .stats import spearman, spearman_rho
from .trees import CART, GradientBoostedTrees, RandomForest

__all__ = [
    "ALL_KINDS", "BayesianRidge", "BenchRow", "CART", "GradientBoostedTrees", "KNN", "RBF", "RBFEnsemble",
    "RandomForest", "Ridge", "FoldConfigError", "MacroModel", "PredictorKind", "benchmark", "fit_cv",
    "fold_indices", "make_predictor", "rows_to_csv", "spearman", "spearman_rho", "warmup",
]
