"""Random forest, AdaBoost (SAMME) and logistic gradient boosting."""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np

from ..errors import ModelMismatch, ShapeMismatch, SingleClass, ValidationError
from ._cart import to_csc
from .tree import Tree, _as_matrix, grow, resolve_max_features

FORMAT = "evidencer-model"
FORMAT_VERSION = 1


class Kind(Enum):
    RandomForest = "RandomForest"
    AdaBoost = "AdaBoost"
    GradientBoosted = "GradientBoosted"

    @classmethod
    def parse(cls, text: str) -> "Kind":
        aliases = {"rf": cls.RandomForest, "ada": cls.AdaBoost, "gbt": cls.GradientBoosted}
        key = str(text).strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        for k in cls:
            if k.value.lower() == key.lower():
                return k
        raise ValidationError(f"unknown model kind: {text!r}")


@dataclass(frozen=True)
class ClassWeights:
    negative: float
    positive: float

    def __post_init__(self) -> None:
        if not (self.negative > 0 and self.positive > 0) or not math.isfinite(self.negative + self.positive):
            raise ValidationError("class weights must be positive and finite")

    def for_labels(self, y: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(y) > 0.5, self.positive, self.negative)


def balanced_weights(labels: Sequence[int] | np.ndarray) -> ClassWeights:
    """w_c = n / (2 * n_c), so both classes carry the same total weight."""
    y = np.asarray(labels)
    n = y.shape[0]
    n_pos = int(np.sum(y > 0.5))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("both classes must be present")
    return ClassWeights(n / (2.0 * n_neg), n / (2.0 * n_pos))


DEFAULTS: dict[Kind, dict[str, Any]] = {
    Kind.RandomForest: {
        "n_trees": 200,
        "max_depth": None,
        "max_features": "sqrt",
        "bootstrap": True,
        "min_leaf_weight": 0.0,
        "learning_rate": 1.0,
    },
    Kind.AdaBoost: {
        "n_trees": 200,
        "max_depth": 3,
        "max_features": None,
        "bootstrap": False,
        "min_leaf_weight": 0.0,
        "learning_rate": 1.0,
    },
    Kind.GradientBoosted: {
        "n_trees": 200,
        "max_depth": 3,
        "max_features": None,
        "bootstrap": False,
        "min_leaf_weight": 0.0,
        "learning_rate": 0.1,
    },
}

_ERR_FLOOR = 1e-10


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(eq=False)
class EnsembleModel:
    kind: Kind
    trees: list[Tree]
    tree_weights: list[float]
    params: dict[str, Any]
    seed: int
    feature_names: list[str]
    init: float = 0.0
    class_weights: ClassWeights | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.trees:
            raise ValidationError("an ensemble needs at least one tree")
        if len(self.trees) != len(self.tree_weights):
            raise ValidationError("one weight per tree")
        if not all(math.isfinite(a) for a in self.tree_weights):
            raise ValidationError("tree weights must be finite")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def decision_function(self, X: Any) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        if self.kind is Kind.RandomForest:
            acc = np.zeros(X.shape[0])
            for t in self.trees:
                acc += t.predict(X)
            return acc / len(self.trees)
        if self.kind is Kind.AdaBoost:
            acc = np.zeros(X.shape[0])
            for t, a in zip(self.trees, self.tree_weights):
                acc += a * np.where(t.predict(X) >= 0.5, 1.0, -1.0)
            return acc
        acc = np.full(X.shape[0], self.init)
        for t, a in zip(self.trees, self.tree_weights):
            acc += a * t.predict(X)
        return acc

    def predict_proba(self, X: Any) -> np.ndarray:
        """Probability of the positive (transformative) class."""
        d = self.decision_function(X)
        if self.kind is Kind.RandomForest:
            return d
        return _sigmoid(d)

    def importances(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean and std over trees of per-tree normalized impurity decrease.

        Trees without any positive decrease (single leaves) are skipped.
        """
        rows = []
        for t in self.trees:
            imp = t.importances()
            s = imp.sum()
            if s > 0:
                rows.append(imp / s)
        if not rows:
            z = np.zeros(self.n_features)
            return z, z.copy()
        m = np.vstack(rows)
        return m.mean(axis=0), m.std(axis=0)

    # serialization
    def to_dict(self) -> dict[str, Any]:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "kind": self.kind.value,
            "params": _jsonable(self.params),
            "seed": self.seed,
            "init": float(self.init),
            "class_weights": None
            if self.class_weights is None
            else {"negative": self.class_weights.negative, "positive": self.class_weights.positive},
            "feature_names": list(self.feature_names),
            "trees": [dict(t.to_dict(), weight=float(a)) for t, a in zip(self.trees, self.tree_weights)],
            "extra": _jsonable(self.extra),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def save(self, path: str | os.PathLike[str]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def from_dict(cls, obj: dict[str, Any], feature_names: Sequence[str] | None = None) -> "EnsembleModel":
        if obj.get("format") != FORMAT:
            raise ValidationError("not a model file")
        if obj.get("version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported model version {obj.get('version')!r}")
        names = list(obj["feature_names"])
        if feature_names is not None and list(feature_names) != names:
            raise ModelMismatch("model was trained on different feature names")
        cw = obj.get("class_weights")
        trees = [Tree.from_dict(t, len(names)) for t in obj["trees"]]
        return cls(
            kind=Kind(obj["kind"]),
            trees=trees,
            tree_weights=[float(t["weight"]) for t in obj["trees"]],
            params=dict(obj["params"]),
            seed=int(obj["seed"]),
            feature_names=names,
            init=float(obj.get("init", 0.0)),
            class_weights=None if cw is None else ClassWeights(cw["negative"], cw["positive"]),
            extra=dict(obj.get("extra") or {}),
        )

    @classmethod
    def load(cls, path: str | os.PathLike[str], feature_names: Sequence[str] | None = None) -> "EnsembleModel":
        with open(path, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: not JSON ({exc})") from None
        return cls.from_dict(obj, feature_names)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _tree_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)]


def fit_ensemble(
    kind: Kind | str,
    X: Any,
    y: Any,
    *,
    n_trees: int | None = None,
    learning_rate: float | None = None,
    bootstrap: bool | None = None,
    class_weights: ClassWeights | str | None = "balanced",
    max_depth: int | None | str = "default",
    max_features: Any = "default",
    min_leaf_weight: float | None = None,
    sample_weights: Any = None,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
) -> EnsembleModel:
    """Train a tree ensemble on 0/1 labels.

    ``class_weights="balanced"`` uses :func:`balanced_weights`; ``None``
    trains unweighted.  Unset hyperparameters take the per-kind DEFAULTS.
    """
    kind = Kind.parse(kind) if isinstance(kind, str) else kind
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise ShapeMismatch(f"X has {n} rows but y has shape {y.shape}")
    if p < 1:
        raise ShapeMismatch("need at least one feature")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError("labels must be 0 or 1")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == n:
        raise SingleClass("training labels contain a single class")
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(p)]
    if len(feature_names) != p:
        raise ShapeMismatch(f"{len(feature_names)} feature names for {p} columns")

    d = DEFAULTS[kind]
    params = {
        "n_trees": d["n_trees"] if n_trees is None else int(n_trees),
        "learning_rate": d["learning_rate"] if learning_rate is None else float(learning_rate),
        "bootstrap": d["bootstrap"] if bootstrap is None else bool(bootstrap),
        "max_depth": d["max_depth"] if max_depth == "default" else max_depth,
        "max_features": d["max_features"] if max_features == "default" else max_features,
        "min_leaf_weight": d["min_leaf_weight"] if min_leaf_weight is None else float(min_leaf_weight),
    }
    if params["n_trees"] < 1:
        raise ValidationError("n_trees must be >= 1")
    if not params["learning_rate"] > 0:
        raise ValidationError("learning_rate must be positive")
    if kind is Kind.AdaBoost and params["max_depth"] not in (1, 2, 3):
        raise ValidationError("AdaBoost uses trees of depth 1 to 3")

    if isinstance(class_weights, str):
        if class_weights != "balanced":
            raise ValidationError(f"unknown class_weights {class_weights!r}")
        cw: ClassWeights | None = balanced_weights(y)
    else:
        cw = class_weights
    base = np.ones(n) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
    if base.shape != (n,):
        raise ShapeMismatch("sample_weights length differs from X rows")
    if cw is not None:
        base = base * cw.for_labels(y)
    params["class_weights"] = "balanced" if isinstance(class_weights, str) else (None if cw is None else "custom")

    csc = to_csc(X)
    mf = resolve_max_features(params["max_features"], p)
    seeds = _tree_seeds(seed, params["n_trees"])
    fitter = {Kind.RandomForest: _fit_forest, Kind.AdaBoost: _fit_adaboost, Kind.GradientBoosted: _fit_gbt}[kind]
    trees, alphas, init = fitter(csc, X, y, base, params, mf, seeds)
    return EnsembleModel(kind, trees, alphas, params, int(seed), list(feature_names), init, cw)


def _fit_forest(csc, X, y, base, params, mf, seeds):
    n = y.shape[0]
    trees = []
    for s in seeds:
        if params["bootstrap"]:
            rng = np.random.default_rng(s)
            counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
            w = base * counts
        else:
            w = base
        trees.append(
            grow(csc, y, w, max_depth=params["max_depth"], min_leaf_weight=params["min_leaf_weight"], max_features=mf, seed=s)
        )
    return trees, [1.0] * len(trees), 0.0


def _fit_adaboost(csc, X, y, base, params, mf, seeds):
    lr = params["learning_rate"]
    w = base / base.sum()
    trees, alphas = [], []
    for s in seeds:
        t = grow(csc, y, w, max_depth=params["max_depth"], min_leaf_weight=params["min_leaf_weight"], max_features=mf, seed=s)
        pred = (t.predict(X) >= 0.5).astype(np.float64)
        miss = pred != y
        err = float(np.sum(w[miss]) / np.sum(w))
        if err >= 0.5 and trees:
            break
        err_c = min(max(err, _ERR_FLOOR), 1.0 - _ERR_FLOOR)
        alpha = max(lr * math.log((1.0 - err_c) / err_c), 0.0)
        trees.append(t)
        alphas.append(alpha)
        if err <= 0.0 or alpha == 0.0:
            break
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    return trees, alphas, 0.0


def _fit_gbt(csc, X, y, base, params, mf, seeds):
    lr = params["learning_rate"]
    pos = float(np.sum(base * y))
    neg = float(np.sum(base * (1.0 - y)))
    init = math.log(pos / neg)
    F = np.full(y.shape[0], init)
    trees = []
    for s in seeds:
        prob = _sigmoid(F)
        resid = y - prob
        hess = np.maximum(prob * (1.0 - prob), 1e-12)
        t = grow(
            csc,
            resid,
            base,
            hess,
            max_depth=params["max_depth"],
            min_leaf_weight=params["min_leaf_weight"],
            max_features=mf,
            seed=s,
            gini=False,
        )
        trees.append(t)
        F = F + lr * t.predict(X)
    return trees, [lr] * len(trees), init


def feature_importances(model: EnsembleModel) -> list[tuple[str, float, float]]:
    """(name, mean, std) sorted by mean descending, ties by column order."""
    mean, std = model.importances()
    order = sorted(range(len(mean)), key=lambda j: (-mean[j], j))
    return [(model.feature_names[j], float(mean[j]), float(std[j])) for j in order]
