from __future__ import annotations

import dataclasses
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evidencer.corpus import filter_corpus
from evidencer.errors import SingleClass, TooFewSamples, ValidationError
from evidencer.features import Source
from evidencer.models import Kind
from evidencer.pipeline import (
    CvConfig,
    CvReport,
    GridCell,
    binary_labels,
    cross_validate,
    descriptive_stats,
    emit_roc,
    error_analysis,
    full_grid,
    roc_auc,
    roc_points,
    stats_tsv,
    stratified_folds,
    trapezoid_area,
)
from evidencer.pipeline import evaluation
from evidencer.pipeline.reports import roc_csv_rows
from evidencer.synthetic import SyntheticSpec, generate


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return total / (len(pos) * len(neg))


def test_fold_examples():
    f = stratified_folds([1] * 20 + [0] * 20, k=10)
    for i in range(10):
        te = f.test_indices(i)
        assert len(te) == 4
        assert sum(1 for j in te if j < 20) == 2
    f = stratified_folds([1] * 21 + [0] * 20, k=10)
    sizes = sorted(len(f.test_indices(i)) for i in range(10))
    assert sizes == [4] * 9 + [5]
    assert stratified_folds([1] * 21 + [0] * 20, k=10, seed=0) == f


@given(st.integers(10, 60), st.integers(10, 60), st.integers(2, 10), st.integers(0, 10**6))
def test_folds_are_stratified_partitions(n_pos, n_neg, k, seed):
    y = [1] * n_pos + [0] * n_neg
    f = stratified_folds(y, k, seed)
    seen = np.concatenate([f.test_indices(i) for i in range(k)])
    assert sorted(seen.tolist()) == list(range(len(y)))
    for i in range(k):
        te = f.test_indices(i)
        n_p = sum(y[j] for j in te)
        assert abs(n_p - n_pos / k) < 1 and abs(len(te) - n_p - n_neg / k) < 1
        assert set(f.train_indices(i).tolist()).isdisjoint(te.tolist())
    sizes = [len(f.test_indices(i)) for i in range(k)]
    assert max(sizes) - min(sizes) <= 1


def test_fold_errors():
    with pytest.raises(TooFewSamples):
        stratified_folds([1] * 5 + [0] * 20, k=10)
    with pytest.raises(SingleClass):
        stratified_folds([1] * 20, k=2)
    with pytest.raises(TooFewSamples):
        stratified_folds([1, 0] * 5, k=1)


def test_auc_examples():
    assert roc_auc([0.9, 0.7, 0.6, 0.4], [1, 0, 1, 0]) == 0.75
    assert roc_auc([0.5, 0.5], [1, 0]) == 0.5
    assert roc_auc([1, 0], [1, 0]) == 1.0
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(ValidationError):
        roc_auc([0.1], [1, 0])


score_sets = st.integers(2, 40).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 5).map(lambda v: v / 5), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
).filter(lambda t: 0 < sum(t[1]) < len(t[1]))


@given(score_sets)
def test_auc_matches_pairwise_and_trapezoid(data):
    s, y = data
    auc = roc_auc(s, y)
    assert auc == brute_auc(s, y)
    pts = roc_points(s, y)
    assert len(pts) == len(s) + 1
    assert pts[0][1:] == (0.0, 0.0) and pts[-1][1:] == (1.0, 1.0)
    assert trapezoid_area(pts) == pytest.approx(auc, abs=1e-12)
    assert roc_auc([3 * v**3 + 1 for v in s], y) == auc


def test_perfect_classifier_passes_top_left():
    pts = roc_points([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert (0.0, 1.0) in [p[1:] for p in pts]


@pytest.fixture(scope="module")
def small_corpus():
    recs = filter_corpus(generate(SyntheticSpec(n_docs=60, seed=5))).kept
    assert len(recs) == 60
    return recs


@pytest.fixture(scope="module")
def small_report(small_corpus):
    return cross_validate(small_corpus, GridCell(), CvConfig(k=3, n_trees=10, seed=1))


def test_report_shape_and_reproducibility(small_corpus, small_report):
    rep = small_report
    assert rep.n_docs == 60 and len(rep.fold_aucs) == 3
    assert rep.auc_min <= rep.auc_avg <= rep.auc_max
    assert sorted(p for fold in rep.fold_scores for p, _, _ in fold) == sorted(r.pmid for r in small_corpus)
    again = cross_validate(small_corpus, GridCell(), CvConfig(k=3, n_trees=10, seed=1))
    assert again.fingerprint == rep.fingerprint
    assert CvReport.from_dict(rep.to_dict()).compute_fingerprint() == rep.fingerprint
    other = cross_validate(small_corpus, GridCell(), CvConfig(k=3, n_trees=10, seed=2))
    assert other.fingerprint != rep.fingerprint


def test_misclassified_follow_threshold(small_report):
    wrong = {m.pmid for m in small_report.misclassified}
    for fold in small_report.fold_scores:
        for pmid, truth, s in fold:
            assert (pmid in wrong) == (int(s >= 0.5) != truth)


def test_vocabulary_never_sees_test_fold(small_corpus, monkeypatch):
    # give every document a unique canary token
    recs = [
        dataclasses.replace(r, citances=tuple(
            dataclasses.replace(c, text=c.text + f" canary{r.pmid}") for c in r.citances
        ))
        for r in small_corpus
    ]
    seen = []
    real = evaluation.fit_vocabulary

    def spy(docs, min_df=1):
        vocab = real(docs, min_df)
        seen.append(set(w for t in vocab.terms for w in t.split() if w.startswith("canary")))
        return vocab

    monkeypatch.setattr(evaluation, "fit_vocabulary", spy)
    cfg = CvConfig(k=3, n_trees=3, min_df=1)
    rep = cross_validate(recs, GridCell(), cfg)
    for f, fold in enumerate(rep.fold_scores):
        test_canaries = {f"canary{p}" for p, _, _ in fold}
        assert seen[f].isdisjoint(test_canaries)
        assert len(seen[f]) == 60 - len(fold)


def test_too_few_samples(small_corpus):
    with pytest.raises(TooFewSamples):
        cross_validate(small_corpus[:12], GridCell(), CvConfig(k=10, n_trees=2))


def test_binary_labels_rejects_unlabeled():
    recs = generate(SyntheticSpec(n_docs=4, seed=1))
    bad = dataclasses.replace(recs[0], recommendations=recs[0].recommendations[:1])
    with pytest.raises(ValidationError):
        binary_labels([bad])


def test_full_grid_size():
    grid = full_grid()
    assert len(grid) == len(Source) * 2 * len(Kind)
    assert len({c.name for c in grid}) == len(grid)


def test_error_analysis_conserves_counts(small_corpus, small_report):
    ea = error_analysis(small_report, small_corpus, n_examples=3)
    assert ea.n_false == len(small_report.misclassified)
    assert ea.n_correct + ea.n_false == 60
    by = {r.pmid: r for r in small_corpus}
    wrong = {m.pmid for m in small_report.misclassified}
    expect = Counter(m.term for p in wrong for m in by[p].mesh_terms if m.major)
    assert dict(ea.false) == dict(expect)
    assert len(ea.examples) == min(3, ea.n_false)
    counts = [c for _, c in ea.correct]
    assert counts == sorted(counts, reverse=True)
    assert ea.to_tsv().splitlines()[0] == "cohort\tterm\tcount"


def test_error_analysis_without_mistakes(small_corpus, small_report):
    clean = dataclasses.replace(small_report, misclassified=[])
    ea = error_analysis(clean, small_corpus)
    assert ea.n_false == 0 and ea.false == [] and ea.examples == []
    assert ea.n_correct == 60


def test_descriptive_stats(small_corpus):
    stats = descriptive_stats(small_corpus)
    assert stats["Transformative"].n + stats["Incremental"].n == 60
    for name, st_ in stats.items():
        assert sum(st_.years.values()) == st_.n
        assert st_.recommendations_median == 2.0
        assert sum(c for _, c in st_.journals) == st_.n
        assert 3 <= st_.citances_median <= 7
    assert "Transformative\tyear" in stats_tsv(stats)
    only_t = [r for r in small_corpus if r.label.kind.value == "Transformative"]
    with pytest.raises(SingleClass):
        descriptive_stats(only_t)


def test_emit_roc_is_deterministic(tmp_path, small_report):
    a = emit_roc(small_report, tmp_path / "a" / "cell.roc")
    b = emit_roc(small_report, tmp_path / "b" / "cell.roc.csv")
    assert a[0].name == "cell.roc.csv" and a[1].name == "cell.roc.svg"
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
    rows = roc_csv_rows(small_report)
    assert len(rows) - 1 == sum(len(f) + 1 for f in small_report.fold_scores)
    assert a[1].read_text().count("<polyline") == 3


def test_auc_is_fast_enough():
    rng = random.Random(0)
    s = [rng.randint(0, 3) for _ in range(500)]
    y = [rng.randint(0, 1) for _ in range(500)]
    assert roc_auc(s, y) == brute_auc(s, y)
