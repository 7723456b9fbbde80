from .design import DesignMatrix, canonical_row_order
from .linear import (
    LinearFit,
    fit_lasso,
    fit_ols,
    fit_ridge,
    lasso_lambda_max,
    soft_threshold,
)
from .autoreg import ArFit, VarFit, fit_ar, fit_var, random_walk_forecast
from .tree import (
    Leaf,
    Split,
    TreeNode,
    TreeParams,
    best_split,
    fit_tree,
    predict_tree,
    tree_features,
)
from .forest import Forest, ForestParams, fit_forest, fit_single_tree, predict_forest
from .boosting import GbtModel, GbtParams, fit_gbt, predict_gbt
from . import registry, serialize

__all__ = [
    "DesignMatrix", "canonical_row_order",
    "LinearFit", "fit_ols", "fit_ridge", "fit_lasso", "lasso_lambda_max",
    "soft_threshold",
    "ArFit", "VarFit", "fit_ar", "fit_var", "random_walk_forecast",
    "Leaf", "Split", "TreeNode", "TreeParams", "best_split", "fit_tree",
    "predict_tree", "tree_features",
    "Forest", "ForestParams", "fit_forest", "fit_single_tree", "predict_forest",
    "GbtModel", "GbtParams", "fit_gbt", "predict_gbt",
    "registry", "serialize",
]
