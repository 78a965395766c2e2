from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import ShapeMismatch, ValidationError
from . import _cart

LEAF = _cart.LEAF


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat binary tree.  Node 0 is the root; ``feature == -1`` marks a leaf.

    ``value`` holds the leaf output (probability of the positive class for
    classification trees); ``impurity_decrease`` is the weighted impurity
    drop recorded at each split.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity_decrease: np.ndarray
    node_weight: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        return _cart.apply_tree(X, self.feature, self.threshold, self.left, self.right, self.value)

    def importances(self) -> np.ndarray:
        """Summed impurity decrease per feature (unnormalized)."""
        out = np.zeros(self.n_features)
        split = self.feature != LEAF
        np.add.at(out, self.feature[split], self.impurity_decrease[split])
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "impurity_decrease": [float(v) for v in self.impurity_decrease],
            "node_weight": [float(v) for v in self.node_weight],
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any], n_features: int) -> "Tree":
        try:
            t = cls(
                np.asarray(obj["feature"], dtype=np.int64),
                np.asarray(obj["threshold"], dtype=np.float64),
                np.asarray(obj["left"], dtype=np.int64),
                np.asarray(obj["right"], dtype=np.int64),
                np.asarray(obj["value"], dtype=np.float64),
                np.asarray(obj["impurity_decrease"], dtype=np.float64),
                np.asarray(obj["node_weight"], dtype=np.float64),
                n_features,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed tree: {exc}") from None
        t.validate()
        return t

    def validate(self) -> None:
        n = self.n_nodes
        arrays = (self.threshold, self.left, self.right, self.value, self.impurity_decrease, self.node_weight)
        if n == 0 or any(a.shape != (n,) for a in arrays):
            raise ValidationError("tree arrays have inconsistent lengths")
        split = self.feature != LEAF
        if np.any(self.feature[split] >= self.n_features) or np.any(self.feature[split] < 0):
            raise ValidationError("tree refers to an unknown feature")
        for arr in (self.left[split], self.right[split]):
            if np.any(arr <= 0) or np.any(arr >= n):
                raise ValidationError("tree child index out of range")
        if not np.all(np.isfinite(self.threshold)) or not np.all(np.isfinite(self.value)):
            raise ValidationError("tree holds non-finite numbers")


def _as_matrix(X: Any, n_features: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeMismatch(f"expected {n_features} features, got {X.shape[1]}")
    return X


def resolve_max_features(spec: Any, n_features: int) -> int:
    if spec is None or spec == "all":
        return n_features
    if spec == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if spec == "log2":
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    if isinstance(spec, float) and 0.0 < spec <= 1.0:
        return max(1, int(spec * n_features))
    if isinstance(spec, (int, np.integer)) and spec >= 1:
        return min(int(spec), n_features)
    raise ValidationError(f"bad max_features: {spec!r}")


def grow(
    csc: tuple[np.ndarray, np.ndarray, np.ndarray],
    y: np.ndarray,
    w: np.ndarray,
    h: np.ndarray | None = None,
    max_depth: int | None = None,
    min_leaf_weight: float = 0.0,
    max_features: int | None = None,
    seed: int = 0,
    gini: bool = True,
) -> Tree:
    """Grow a tree from a matrix in (indptr, rows, values) column form."""
    indptr, rows, data = csc
    n_features = indptr.shape[0] - 1
    if h is None:
        h = np.ones_like(y)
    arrays = _cart.build_tree(
        indptr,
        rows,
        data,
        y.shape[0],
        y,
        w,
        h,
        -1 if max_depth is None else int(max_depth),
        float(min_leaf_weight),
        n_features if max_features is None else int(max_features),
        int(seed) % (2**32),
        2.0 if gini else 1.0,
    )
    return Tree(*arrays, n_features=n_features)


def fit_tree(
    X: Any,
    y: Any,
    sample_weights: Any = None,
    max_depth: int | None = None,
    min_leaf_weight: float = 0.0,
    max_features: Any = None,
    seed: int = 0,
) -> Tree:
    """Fit a classification tree on 0/1 labels by weighted Gini decrease.

    Leaves hold the weighted fraction of positive samples.  Splits are placed
    at midpoints between consecutive distinct values with ``x <= threshold``
    going left; equal gains go to the lowest feature index, then the lowest
    threshold.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if p < 1:
        raise ShapeMismatch("need at least one feature")
    w = np.ones(n) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
    if y.shape != (n,) or w.shape != (n,):
        raise ShapeMismatch(f"X has {n} rows but y has {y.shape} and weights {w.shape}")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError("labels must be 0 or 1")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("sample weights must be finite and non-negative")
    if not np.any(w > 0):
        raise ValidationError("all sample weights are zero")
    return grow(
        _cart.to_csc(X),
        y,
        w,
        max_depth=max_depth,
        min_leaf_weight=min_leaf_weight,
        max_features=resolve_max_features(max_features, p),
        seed=seed,
    )
