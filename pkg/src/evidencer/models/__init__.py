"""Tree ensembles grown from scratch on a compiled CART kernel."""
from __future__ import annotations

from .ensemble import (
    DEFAULTS,
    ClassWeights,
    EnsembleModel,
    Kind,
    balanced_weights,
    feature_importances,
    fit_ensemble,
)
from .tree import Tree, fit_tree, resolve_max_features

__all__ = [
    "DEFAULTS",
    "ClassWeights",
    "EnsembleModel",
    "Kind",
    "Tree",
    "balanced_weights",
    "feature_importances",
    "fit_ensemble",
    "fit_tree",
    "resolve_max_features",
]
