"""Versioned JSON model persistence with exact float round-trips.

Numeric arrays are stored as base64 of their little-endian IEEE bytes, so a
reloaded model reproduces in-memory predictions bit for bit. An optional
preprocessing block travels with the model so prediction inputs can be imputed
and scaled exactly as at training time.
"""

from __future__ import annotations

import base64
import dataclasses
import json
from pathlib import Path

import numpy as np

from ..features import PreprocessState
from .base import MajorityConfig, MajorityModel, Model
from .forest import ForestConfig, RandomForest
from .gbt import GbtConfig, GradientBoostedTrees, _GbtTree
from .knn import KnnConfig, KnnClassifier
from .mlp import MlpConfig, MlpClassifier
from .tree import DecisionTree, TreeConfig, _Tree

MODEL_FORMAT = "adherence-model"
FORMAT_VERSION = 1

CONFIG_TYPES = {
    "knn": KnnConfig,
    "tree": TreeConfig,
    "forest": ForestConfig,
    "gbt": GbtConfig,
    "mlp": MlpConfig,
    "majority": MajorityConfig,
}

MODEL_TYPES = {
    "knn": KnnClassifier,
    "tree": DecisionTree,
    "forest": RandomForest,
    "gbt": GradientBoostedTrees,
    "mlp": MlpClassifier,
    "majority": MajorityModel,
}


def encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a)
    if a.dtype.byteorder == ">":
        a = a.astype(a.dtype.newbyteorder("<"))
    return {"dtype": a.dtype.str, "shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(d: dict) -> np.ndarray:
    buf = base64.b64decode(d["data"])
    return np.frombuffer(buf, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def _pack_cart(tree: _Tree) -> dict:
    return {
        "feature": encode_array(tree.feature),
        "threshold": encode_array(tree.threshold),
        "left": encode_array(tree.left),
        "right": encode_array(tree.right),
        "prob1": encode_array(tree.prob1),
        "importance": encode_array(tree.importance),
    }


def _unpack_cart(d: dict) -> _Tree:
    return _Tree(*(decode_array(d[k]) for k in ("feature", "threshold", "left", "right", "prob1", "importance")))


def _pack_gbt_tree(tree: _GbtTree) -> dict:
    return {
        "feature": encode_array(tree.feature),
        "threshold": encode_array(tree.threshold),
        "left": encode_array(tree.left),
        "right": encode_array(tree.right),
        "value": encode_array(tree.value),
    }


def _unpack_gbt_tree(d: dict) -> _GbtTree:
    return _GbtTree(*(decode_array(d[k]) for k in ("feature", "threshold", "left", "right", "value")))


def _pack_params(model: Model) -> dict:
    if isinstance(model, KnnClassifier):
        return {"X": encode_array(model.X_), "y": encode_array(model.y_)}
    if isinstance(model, DecisionTree):
        return {"tree": _pack_cart(model.tree_)}
    if isinstance(model, RandomForest):
        return {
            "trees": [_pack_cart(t) for t in model.trees_],
            "importances": None if model.importances_ is None else encode_array(model.importances_),
        }
    if isinstance(model, GradientBoostedTrees):
        return {"trees": [_pack_gbt_tree(t) for t in model.trees_]}
    if isinstance(model, MlpClassifier):
        return {
            "weights": [encode_array(W) for W in model.weights_],
            "biases": [encode_array(b) for b in model.biases_],
        }
    if isinstance(model, MajorityModel):
        return {"p1": float(model.p1_).hex()}  # hex keeps the exact binary64 value
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def _unpack_params(model: Model, params: dict) -> None:
    if isinstance(model, KnnClassifier):
        model.X_ = decode_array(params["X"])
        model.y_ = decode_array(params["y"])
    elif isinstance(model, DecisionTree):
        model.tree_ = _unpack_cart(params["tree"])
    elif isinstance(model, RandomForest):
        model.trees_ = [_unpack_cart(t) for t in params["trees"]]
        model.importances_ = None if params["importances"] is None else decode_array(params["importances"])
    elif isinstance(model, GradientBoostedTrees):
        model.trees_ = [_unpack_gbt_tree(t) for t in params["trees"]]
    elif isinstance(model, MlpClassifier):
        model.weights_ = [decode_array(W) for W in params["weights"]]
        model.biases_ = [decode_array(b) for b in params["biases"]]
    elif isinstance(model, MajorityModel):
        model.p1_ = float.fromhex(params["p1"])
    else:
        raise TypeError(f"cannot deserialize model of type {type(model).__name__}")


def _pack_preprocess(state: PreprocessState) -> dict:
    return {
        "column_names": state.column_names,
        "modes": encode_array(state.modes),
        "scale_min": encode_array(state.scale_min),
        "scale_max": encode_array(state.scale_max),
        "static": encode_array(state.static),
        "fitted_on": state.fitted_on,
    }


def _unpack_preprocess(d: dict) -> PreprocessState:
    return PreprocessState(
        column_names=list(d["column_names"]),
        modes=decode_array(d["modes"]),
        scale_min=decode_array(d["scale_min"]),
        scale_max=decode_array(d["scale_max"]),
        static=decode_array(d["static"]),
        fitted_on=int(d["fitted_on"]),
    )


def save_model(model: Model, path: str | Path, preprocess: PreprocessState | None = None) -> None:
    if not model.is_fitted:
        raise ValueError("refusing to serialize an unfitted model")
    doc = {
        "format": MODEL_FORMAT,
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "config": dataclasses.asdict(model.cfg),
        "n_features": model.n_features_,
        "feature_names": model.feature_names,
        "params": _pack_params(model),
        "preprocess": None if preprocess is None else _pack_preprocess(preprocess),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> tuple[Model, PreprocessState | None]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt model file {path}: {exc}") from None
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model file: {path}")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')}")
    kind = doc["kind"]
    if kind not in MODEL_TYPES:
        raise ValueError(f"unknown model kind {kind!r}")
    cfg = config_from_dict(kind, doc["config"])
    model = MODEL_TYPES[kind](cfg)
    model.n_features_ = int(doc["n_features"])
    model.feature_names = doc["feature_names"]
    _unpack_params(model, doc["params"])
    preprocess = None if doc.get("preprocess") is None else _unpack_preprocess(doc["preprocess"])
    return model, preprocess


def config_from_dict(kind: str, values: dict) -> object:
    """Rebuild a model config dataclass from plain JSON values."""
    if kind not in CONFIG_TYPES:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(CONFIG_TYPES)}")
    values = dict(values)
    if kind == "mlp" and "hidden_layers" in values:
        values["hidden_layers"] = tuple(values["hidden_layers"])
    try:
        return CONFIG_TYPES[kind](**values)
    except TypeError as exc:
        raise ValueError(f"bad {kind} config: {exc}") from None
