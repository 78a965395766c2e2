"""Report tables and ROC plots built from cross-validation results."""
from __future__ import annotations

import os
import statistics
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..corpus import ArticleRecord, LabelKind, assign_label, concat_citances, window_citances
from ..errors import SingleClass
from .evaluation import CvReport, roc_points

YEAR_BUCKETS: tuple[tuple[str, int, int], ...] = (
    ("2001-2004", 2001, 2004),
    ("2005-2008", 2005, 2008),
    ("2009-2012", 2009, 2012),
    ("2013-2016", 2013, 2016),
    ("2017-2019", 2017, 2019),
)
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(x: float) -> str:
    return "inf" if x == float("inf") else repr(float(x))


def roc_csv_rows(report: CvReport) -> list[str]:
    rows = ["fold,point,threshold,fpr,tpr"]
    for f, fold in enumerate(report.fold_scores):
        pts = roc_points([s for _, _, s in fold], [t for _, t, _ in fold])
        for i, (thr, fpr, tpr) in enumerate(pts):
            rows.append(f"{f},{i},{_fmt(thr)},{_fmt(fpr)},{_fmt(tpr)}")
    return rows


def roc_svg(report: CvReport, size: int = 400, margin: int = 40) -> str:
    plot = size - 2 * margin

    def xy(fpr: float, tpr: float) -> str:
        return f"{margin + fpr * plot:.3f},{margin + (1.0 - tpr) * plot:.3f}"

    title = f"ROC per fold: AUC_avg {report.auc_avg:.3f} ({report.auc_min:.3f}-{report.auc_max:.3f})"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{plot}" height="{plot}" fill="none" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin + plot}" x2="{margin + plot}" y2="{margin}" stroke="#999999" stroke-dasharray="4,4"/>',
        f'<text x="{size / 2:.1f}" y="{margin / 2:.1f}" font-size="12" text-anchor="middle">{title}</text>',
        f'<text x="{size / 2:.1f}" y="{size - 8}" font-size="11" text-anchor="middle">False positive rate</text>',
        f'<text x="12" y="{size / 2:.1f}" font-size="11" text-anchor="middle" transform="rotate(-90 12 {size / 2:.1f})">True positive rate</text>',
    ]
    for f, fold in enumerate(report.fold_scores):
        pts = roc_points([s for _, _, s in fold], [t for _, t, _ in fold])
        poly = " ".join(xy(fpr, tpr) for _, fpr, tpr in pts)
        colour = PALETTE[f % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{poly}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_roc(report: CvReport, path: str | os.PathLike[str]) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and ``<path>.svg``; the outputs depend only on the report."""
    base = Path(path)
    if base.suffix in (".csv", ".svg"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.parent / (base.name + ".csv")
    svg_path = base.parent / (base.name + ".svg")
    csv_path.write_text("\n".join(roc_csv_rows(report)) + "\n", encoding="utf-8", newline="\n")
    svg_path.write_text(roc_svg(report), encoding="utf-8", newline="\n")
    return csv_path, svg_path


@dataclass
class ErrorExample:
    pmid: str
    truth: int
    score: float
    fold: int
    citances: str


@dataclass
class ErrorAnalysis:
    correct: list[tuple[str, int]]
    false: list[tuple[str, int]]
    n_correct: int
    n_false: int
    examples: list[ErrorExample] = field(default_factory=list)

    def to_tsv(self, top: int | None = 20) -> str:
        lines = ["cohort\tterm\tcount"]
        for cohort, table in (("correct", self.correct), ("false", self.false)):
            for term, c in table[:top] if top else table:
                lines.append(f"{cohort}\t{term}\t{c}")
        return "\n".join(lines) + "\n"

    def examples_tsv(self) -> str:
        lines = ["pmid\ttruth\tscore\tfold\tcitances"]
        for e in self.examples:
            text = e.citances.replace("\t", " ").replace("\n", " ")
            lines.append(f"{e.pmid}\t{e.truth}\t{e.score!r}\t{e.fold}\t{text}")
        return "\n".join(lines) + "\n"


def _major_terms(rec: ArticleRecord) -> list[str]:
    return [m.term for m in rec.mesh_terms if m.major]


def _ranked(counter: Counter) -> list[tuple[str, int]]:
    return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))


def error_analysis(
    report: CvReport,
    records: Sequence[ArticleRecord],
    n_examples: int = 10,
    window_months: int = 24,
) -> ErrorAnalysis:
    """Major-MeSH frequency tables for correctly and falsely classified studies."""
    by_pmid = {r.pmid: r for r in records}
    wrong = {m.pmid for m in report.misclassified}
    evaluated = [p for fold in report.fold_scores for p, _, _ in fold]
    good: Counter[str] = Counter()
    bad: Counter[str] = Counter()
    n_good = n_bad = 0
    for pmid in evaluated:
        rec = by_pmid.get(pmid)
        if rec is None:
            continue
        if pmid in wrong:
            bad.update(_major_terms(rec))
            n_bad += 1
        else:
            good.update(_major_terms(rec))
            n_good += 1
    examples = []
    for m in sorted(report.misclassified, key=lambda m: (-abs(m.score - m.truth), m.pmid))[:n_examples]:
        rec = by_pmid.get(m.pmid)
        if rec is None:
            continue
        cits = window_citances(rec, window_months) if rec.pub_date else list(rec.citances)
        examples.append(ErrorExample(m.pmid, m.truth, m.score, m.fold, concat_citances(cits)))
    return ErrorAnalysis(_ranked(good), _ranked(bad), n_good, n_bad, examples)


@dataclass
class ClassStats:
    n: int
    years: dict[str, int]
    journals: list[tuple[str, int]]
    recommendations_mean: float
    recommendations_median: float
    citances_mean: float
    citances_median: float


def _bucket(year: int | None) -> str:
    if year is not None:
        for name, lo, hi in YEAR_BUCKETS:
            if lo <= year <= hi:
                return name
    return "other"


def descriptive_stats(records: Sequence[ArticleRecord], window_months: int = 24) -> dict[str, ClassStats]:
    """Per-class year buckets, journals and recommendation/citance counts."""
    groups: dict[str, list[ArticleRecord]] = {"Incremental": [], "Transformative": []}
    for r in records:
        lab = r.label or assign_label(r.recommendations)
        if lab.kind in (LabelKind.Incremental, LabelKind.Transformative):
            groups[lab.kind.value].append(r)
    out = {}
    for name, recs in groups.items():
        if not recs:
            raise SingleClass(f"no {name} articles")
        years = {b[0]: 0 for b in YEAR_BUCKETS}
        years["other"] = 0
        journals: Counter[str] = Counter()
        n_recs = []
        n_cits = []
        for r in recs:
            years[_bucket(r.pub_date.year if r.pub_date else None)] += 1
            journals[r.journal or "(unknown)"] += 1
            n_recs.append(len(r.recommendations))
            n_cits.append(len(window_citances(r, window_months)) if r.pub_date else len(r.citances))
        out[name] = ClassStats(
            n=len(recs),
            years=years,
            journals=_ranked(journals),
            recommendations_mean=statistics.fmean(n_recs),
            recommendations_median=float(statistics.median(n_recs)),
            citances_mean=statistics.fmean(n_cits),
            citances_median=float(statistics.median(n_cits)),
        )
    return out


def stats_tsv(stats: dict[str, ClassStats], top_journals: int = 10) -> str:
    lines = ["class\tsection\titem\tcount\tshare"]
    for name, st in stats.items():
        for bucket, c in st.years.items():
            lines.append(f"{name}\tyear\t{bucket}\t{c}\t{c / st.n:.3f}")
        for j, c in st.journals[:top_journals]:
            lines.append(f"{name}\tjournal\t{j}\t{c}\t{c / st.n:.3f}")
        lines.append(f"{name}\trecommendations\tmean\t{st.recommendations_mean:.3f}\t")
        lines.append(f"{name}\trecommendations\tmedian\t{st.recommendations_median:g}\t")
        lines.append(f"{name}\tcitances\tmean\t{st.citances_mean:.3f}\t")
        lines.append(f"{name}\tcitances\tmedian\t{st.citances_median:g}\t")
    return "\n".join(lines) + "\n"
