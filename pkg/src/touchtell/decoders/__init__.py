from .models import (ForestModel, LinearSvmModel, TreeModel, load_model, predict,
                     predict_scores, save_model, train, train_decision_tree,
                     train_linear_svm, train_random_forest)
from .selection import (DEFAULT_GRIDS, CvReport, GridSpec, assert_disjoint_groups,
                        fit_standardized, fuse_features, grid_search_cv,
                        grouped_stratified_folds, select_modality, split_blocks)

__all__ = [
    "ForestModel", "LinearSvmModel", "TreeModel", "load_model", "predict", "predict_scores",
    "save_model", "train", "train_decision_tree", "train_linear_svm", "train_random_forest",
    "DEFAULT_GRIDS", "CvReport", "GridSpec", "assert_disjoint_groups", "fit_standardized",
    "fuse_features", "grid_search_cv", "grouped_stratified_folds", "select_modality",
    "split_blocks",
]
