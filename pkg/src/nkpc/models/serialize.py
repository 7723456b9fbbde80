"""JSON (de)serialization for fitted models, for reproducible re-scoring."""
from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .boosting import GbtModel, GbtParams
from .forest import Forest, ForestParams
from .linear import LinearFit
from .tree import Leaf, Split, TreeNode


def tree_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.value, "n": node.n}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": tree_to_dict(node.left),
        "right": tree_to_dict(node.right),
    }


def tree_from_dict(payload: dict) -> TreeNode:
    if "leaf" in payload:
        return Leaf(payload["leaf"], payload["n"])
    return Split(
        payload["feature"], payload["threshold"],
        tree_from_dict(payload["left"]), tree_from_dict(payload["right"]),
    )


def model_to_dict(model) -> dict:
    if isinstance(model, LinearFit):
        return {
            "kind": "linear",
            "intercept": model.intercept,
            "coefficients": model.coefficients.tolist(),
            "feature_names": list(model.feature_names),
            "penalty": list(model.penalty),
        }
    if isinstance(model, Forest):
        return {
            "kind": "forest",
            "params": asdict(model.params),
            "feature_names": list(model.feature_names),
            "trees": [tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, GbtModel):
        return {
            "kind": "gbt",
            "base_score": model.base_score,
            "params": asdict(model.params),
            "feature_names": list(model.feature_names),
            "trees": [tree_to_dict(t) for t in model.trees],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(payload: dict):
    kind = payload["kind"]
    if kind == "linear":
        return LinearFit(
            payload["intercept"], np.array(payload["coefficients"]),
            tuple(payload["feature_names"]), tuple(payload["penalty"]),
        )
    if kind == "forest":
        return Forest(
            tuple(tree_from_dict(t) for t in payload["trees"]),
            ForestParams(**payload["params"]),
            tuple(payload["feature_names"]),
        )
    if kind == "gbt":
        return GbtModel(
            payload["base_score"],
            tuple(tree_from_dict(t) for t in payload["trees"]),
            GbtParams(**payload["params"]),
            tuple(payload["feature_names"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def dumps(model) -> str:
    return json.dumps(model_to_dict(model))


def loads(text: str):
    return model_from_dict(json.loads(text))
