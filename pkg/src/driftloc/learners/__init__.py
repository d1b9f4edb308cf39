"""Binary classifiers with feature-importance extraction.

The model zoo behind model-based drift explanations: random-forest and
extra-trees ensembles with impurity or permutation importance, plus l2
logistic regression and a linear SVM whose absolute standardized weights
serve as importances.
"""

from .dataset import LabeledWindowDataset, stratified_fold_indices, train_holdout_split
from .importance import (
    ImportanceVector,
    accuracy,
    impurity_importance,
    linear_importance,
    permutation_importance,
)
from .linear import (
    DEFAULT_C_GRID,
    LinearModel,
    fit_linear_svm,
    fit_logreg_cv,
    linear_from_json,
    linear_to_json,
    svm_objective,
)
from .trees import TreeEnsembleModel, ensemble_from_json, ensemble_to_json, fit_tree_ensemble

__all__ = [
    "DEFAULT_C_GRID",
    "ImportanceVector",
    "LabeledWindowDataset",
    "LinearModel",
    "TreeEnsembleModel",
    "accuracy",
    "ensemble_from_json",
    "ensemble_to_json",
    "fit_linear_svm",
    "fit_logreg_cv",
    "fit_tree_ensemble",
    "impurity_importance",
    "linear_from_json",
    "linear_importance",
    "linear_to_json",
    "permutation_importance",
    "stratified_fold_indices",
    "svm_objective",
    "train_holdout_split",
]
