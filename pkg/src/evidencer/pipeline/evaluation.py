"""Stratified cross-validation and ROC/AUC computation."""
from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from ..corpus import ArticleRecord, LabelKind, assign_label
from ..errors import SingleClass, TooFewSamples, ValidationError
from ..features import (
    DocAnalysis,
    Source,
    VectorizerMode,
    analyses_for,
    build_matrix,
    feature_names,
    fit_vocabulary,
)
from ..lingua import TaggerModel, default_tagger
from ..models import Kind, fit_ensemble
from ..sentiment import SentimentLexicon, default_lexicon

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FoldAssignment:
    folds: tuple[int, ...]
    k: int
    seed: int

    def test_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.folds) == f)

    def train_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.folds) != f)


def stratified_folds(labels: Sequence[int], k: int = 10, seed: int = 0) -> FoldAssignment:
    """Shuffle each class with a seeded RNG, then deal its members round-robin.

    Each class starts dealing where the previous one stopped, so fold sizes
    differ by at most one as well.
    """
    y = np.asarray(labels)
    if k < 2:
        raise TooFewSamples("k must be at least 2")
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise SingleClass("stratification needs two classes")
    rng = np.random.default_rng(seed)
    folds = np.full(y.shape[0], -1, dtype=np.int64)
    offset = 0
    for c in classes:
        members = np.flatnonzero(y == c)
        if members.shape[0] < k:
            raise TooFewSamples(f"class {c!r} has {members.shape[0]} members, fewer than k={k}")
        members = members[rng.permutation(members.shape[0])]
        folds[members] = (np.arange(members.shape[0]) + offset) % k
        offset = (offset + members.shape[0]) % k
    return FoldAssignment(tuple(int(f) for f in folds), k, seed)


def _check_binary(scores: Sequence[float], labels: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValidationError("scores and labels must be 1-D and equally long")
    pos = y == 1
    if not pos.any() or pos.all():
        raise SingleClass("AUC needs both classes")
    return s, pos


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values sharing the average rank."""
    order = np.argsort(values, kind="mergesort")
    sv = values[order]
    ranks = np.empty(values.shape[0])
    i = 0
    n = sv.shape[0]
    while i < n:
        j = i + 1
        while j < n and sv[j] == sv[i]:
            j += 1
        ranks[order[i:j]] = (i + 1 + j) / 2.0
        i = j
    return ranks


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC; ties count one half."""
    s, pos = _check_binary(scores, labels)
    n_pos = int(pos.sum())
    n_neg = s.shape[0] - n_pos
    r = float(midranks(s)[pos].sum())
    return (r - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_points(scores: Sequence[float], labels: Sequence[int]) -> list[tuple[float, float, float]]:
    """n+1 (threshold, fpr, tpr) points, walking scores from high to low.

    Inside a run of tied scores the points are interpolated linearly between
    the run's end points, so the trapezoid area equals :func:`roc_auc`.
    """
    s, pos = _check_binary(scores, labels)
    n = s.shape[0]
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    order = np.argsort(-s, kind="mergesort")
    ss = s[order]
    pp = pos[order]
    pts = [(float("inf"), 0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < n:
        j = i + 1
        while j < n and ss[j] == ss[i]:
            j += 1
        g_tp = int(pp[i:j].sum())
        g_fp = (j - i) - g_tp
        for step in range(1, j - i + 1):
            frac = step / (j - i)
            pts.append((float(ss[i]), (fp + frac * g_fp) / n_neg, (tp + frac * g_tp) / n_pos))
        tp += g_tp
        fp += g_fp
        i = j
    return pts


def trapezoid_area(points: Sequence[tuple[float, float, float]]) -> float:
    area = 0.0
    for (_, x0, y0), (_, x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


@dataclass(frozen=True)
class GridCell:
    source: Source = Source.citances
    mode: VectorizerMode = VectorizerMode.Count
    classifier: Kind = Kind.RandomForest

    @property
    def name(self) -> str:
        return f"{self.source.value}-{self.mode.value}-{self.classifier.value}"

    def as_dict(self) -> dict[str, str]:
        return {"source": self.source.value, "mode": self.mode.value, "classifier": self.classifier.value}


def full_grid() -> list[GridCell]:
    return [GridCell(s, m, c) for s in Source for m in VectorizerMode for c in Kind]


@dataclass(frozen=True)
class CvConfig:
    k: int = 10
    seed: int = 0
    min_df: int = 2
    window_months: int = 24
    n_trees: int = 200
    max_depth: Any = "default"
    max_features: Any = "default"
    learning_rate: float | None = None
    threshold: float = 0.5
    merge_auc: bool = False
    pos_counts: bool = False
    per_sentence: bool = False
    top_features: int = 50

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Misclassified:
    pmid: str
    truth: int
    score: float
    fold: int


@dataclass
class CvReport:
    cell: dict[str, str]
    config: dict[str, Any]
    n_docs: int
    n_positive: int
    fold_aucs: list[float]
    auc_avg: float
    auc_min: float
    auc_max: float
    auc_merge: float | None
    misclassified: list[Misclassified]
    fold_scores: list[list[tuple[str, int, float]]]
    importances: list[tuple[str, float, float]]
    timing: dict[str, float] = field(default_factory=dict)
    fingerprint: str = ""

    def body(self) -> dict[str, Any]:
        """Everything except timing and the fingerprint itself."""
        return {
            "cell": self.cell,
            "config": self.config,
            "n_docs": self.n_docs,
            "n_positive": self.n_positive,
            "fold_aucs": self.fold_aucs,
            "auc_avg": self.auc_avg,
            "auc_min": self.auc_min,
            "auc_max": self.auc_max,
            "auc_merge": self.auc_merge,
            "misclassified": [asdict(m) for m in self.misclassified],
            "fold_scores": [[list(t) for t in fold] for fold in self.fold_scores],
            "importances": [list(t) for t in self.importances],
        }

    def compute_fingerprint(self) -> str:
        blob = json.dumps(self.body(), sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict[str, Any]:
        d = self.body()
        d["fingerprint"] = self.fingerprint
        d["timing"] = self.timing
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CvReport":
        try:
            return cls(
                cell=dict(d["cell"]),
                config=dict(d["config"]),
                n_docs=int(d["n_docs"]),
                n_positive=int(d["n_positive"]),
                fold_aucs=[float(a) for a in d["fold_aucs"]],
                auc_avg=float(d["auc_avg"]),
                auc_min=float(d["auc_min"]),
                auc_max=float(d["auc_max"]),
                auc_merge=None if d.get("auc_merge") is None else float(d["auc_merge"]),
                misclassified=[Misclassified(**m) for m in d["misclassified"]],
                fold_scores=[[(str(p), int(t), float(s)) for p, t, s in fold] for fold in d["fold_scores"]],
                importances=[(str(n), float(m), float(s)) for n, m, s in d["importances"]],
                timing=dict(d.get("timing") or {}),
                fingerprint=str(d.get("fingerprint", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed report: {exc}") from None


def binary_labels(records: Sequence[ArticleRecord]) -> np.ndarray:
    """1 for Transformative, 0 for Incremental; anything else is an error."""
    out = []
    for r in records:
        lab = r.label or assign_label(r.recommendations)
        if lab.kind is LabelKind.Transformative:
            out.append(1)
        elif lab.kind is LabelKind.Incremental:
            out.append(0)
        else:
            raise ValidationError(f"article {r.pmid} is {lab.format()}, not usable for training")
    return np.asarray(out, dtype=np.int64)


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate(
    records: Sequence[ArticleRecord],
    cell: GridCell = GridCell(),
    config: CvConfig = CvConfig(),
    tagger: TaggerModel | None = None,
    lexicon: SentimentLexicon | None = None,
    analyses: Sequence[DocAnalysis] | None = None,
    labels: Sequence[int] | None = None,
) -> CvReport:
    """k-fold AUC of one grid cell.

    Tokens, POS tags and compound scores do not depend on the split, so they
    are computed once (or passed in via ``analyses``).  The vocabulary, its
    document frequencies and the model are fitted on each training split
    only.
    """
    t0 = time.perf_counter()
    y = np.asarray(labels, dtype=np.int64) if labels is not None else binary_labels(records)
    if y.shape[0] != len(records):
        raise ValidationError("one label per record")
    folds = stratified_folds(y, config.k, config.seed)
    if analyses is None:
        analyses = analyses_for(
            records,
            cell.source,
            tagger or default_tagger(),
            lexicon or default_lexicon(),
            config.window_months,
            config.pos_counts,
            config.per_sentence,
        )
    t1 = time.perf_counter()

    fold_aucs: list[float] = []
    fold_scores: list[list[tuple[str, int, float]]] = []
    missed: list[Misclassified] = []
    tree_imps: dict[str, list[float]] = {}
    n_imp_trees = 0
    for f in range(config.k):
        tr = folds.train_indices(f)
        te = folds.test_indices(f)
        vocab = fit_vocabulary([analyses[i].terms for i in tr], config.min_df)
        Xtr = build_matrix([analyses[i] for i in tr], vocab, cell.mode)
        Xte = build_matrix([analyses[i] for i in te], vocab, cell.mode)
        model = fit_ensemble(
            cell.classifier,
            Xtr,
            y[tr],
            n_trees=config.n_trees,
            learning_rate=config.learning_rate,
            max_depth=config.max_depth,
            max_features=config.max_features,
            class_weights="balanced",
            seed=_fold_seed(config.seed, f),
            feature_names=feature_names(vocab),
        )
        scores = model.predict_proba(Xte)
        fold_aucs.append(roc_auc(scores, y[te]))
        rows = []
        for i, s in zip(te.tolist(), scores.tolist()):
            truth = int(y[i])
            rows.append((records[i].pmid, truth, float(s)))
            if int(s >= config.threshold) != truth:
                missed.append(Misclassified(records[i].pmid, truth, float(s), f))
        fold_scores.append(rows)
        # per-tree normalized importances, pooled over every fold's trees
        for t in model.trees:
            imp = t.importances()
            total = imp.sum()
            if total <= 0:
                continue
            n_imp_trees += 1
            for j in np.flatnonzero(imp).tolist():
                tree_imps.setdefault(model.feature_names[j], []).append(float(imp[j] / total))

    importances = []
    for name, vals in tree_imps.items():
        v = np.zeros(n_imp_trees)
        v[: len(vals)] = vals
        importances.append((name, float(v.mean()), float(v.std())))
    importances.sort(key=lambda t: (-t[1], t[0]))
    importances = importances[: config.top_features]

    merge = None
    if config.merge_auc:
        all_s = [s for fold in fold_scores for _, _, s in fold]
        all_y = [t for fold in fold_scores for _, t, _ in fold]
        merge = roc_auc(all_s, all_y)

    rep = CvReport(
        cell=cell.as_dict(),
        config=config.as_dict(),
        n_docs=len(records),
        n_positive=int(y.sum()),
        fold_aucs=fold_aucs,
        auc_avg=float(np.mean(fold_aucs)),
        auc_min=float(min(fold_aucs)),
        auc_max=float(max(fold_aucs)),
        auc_merge=merge,
        misclassified=missed,
        fold_scores=fold_scores,
        importances=importances,
        timing={"features_s": t1 - t0, "total_s": time.perf_counter() - t0},
    )
    rep.fingerprint = rep.compute_fingerprint()
    log.info("%s: AUC_avg %.3f (%.3f-%.3f)", cell.name, rep.auc_avg, rep.auc_min, rep.auc_max)
    return rep
