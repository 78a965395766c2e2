"""Cross-validation, ROC/AUC and report emission."""
from __future__ import annotations

from .evaluation import (
    CvConfig,
    CvReport,
    FoldAssignment,
    GridCell,
    Misclassified,
    binary_labels,
    cross_validate,
    full_grid,
    roc_auc,
    roc_points,
    stratified_folds,
    trapezoid_area,
)
from .reports import descriptive_stats, emit_roc, error_analysis, stats_tsv

__all__ = [
    "CvConfig",
    "CvReport",
    "FoldAssignment",
    "GridCell",
    "Misclassified",
    "binary_labels",
    "cross_validate",
    "descriptive_stats",
    "emit_roc",
    "error_analysis",
    "full_grid",
    "roc_auc",
    "roc_points",
    "stratified_folds",
    "stats_tsv",
    "trapezoid_area",
]
