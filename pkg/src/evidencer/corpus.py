"""Study records, expert-tag labeling rules and the citation-window filter."""
from __future__ import annotations

import calendar
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .errors import MissingDate, SchemaError, ValidationError

__all__ = [
    "RecommendationTag",
    "T_TAGS",
    "I_TAGS",
    "Precision",
    "PartialDate",
    "MeshTerm",
    "ExpertRecommendation",
    "CitingSentence",
    "ArticleRecord",
    "LabelKind",
    "ExclusionReason",
    "Label",
    "TRANSFORMATIVE",
    "INCREMENTAL",
    "assign_label",
    "window_citances",
    "concat_citances",
    "is_clinical",
    "FilterResult",
    "filter_corpus",
    "record_to_dict",
    "record_from_dict",
]


class RecommendationTag(Enum):
    Confirmation = "Confirmation"
    ChangesClinicalPractice = "ChangesClinicalPractice"
    Controversial = "Controversial"
    Refutation = "Refutation"
    GoodForTeaching = "GoodForTeaching"
    InterestingHypothesis = "InterestingHypothesis"
    NewFinding = "NewFinding"
    NovelDrugTarget = "NovelDrugTarget"
    TechnicalAdvance = "TechnicalAdvance"

    @classmethod
    def parse(cls, text: str) -> "RecommendationTag":
        """Accept the canonical name or the human form ("Changes Clinical Practice")."""
        key = re.sub(r"[\s_\-]+", "", str(text)).lower()
        for tag in cls:
            if tag.value.lower() == key:
                return tag
        raise ValidationError(f"unknown recommendation tag: {text!r}")

    def format(self) -> str:
        return self.value


T_TAGS = frozenset(
    {
        RecommendationTag.Refutation,
        RecommendationTag.ChangesClinicalPractice,
        RecommendationTag.Controversial,
    }
)
I_TAGS = frozenset({RecommendationTag.Confirmation})


class Precision(Enum):
    YEAR = 1
    MONTH = 2
    DAY = 3


_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{1,2})(?:-(\d{1,2}))?)?$")


@dataclass(frozen=True, order=True)
class PartialDate:
    """Calendar date whose month and day may be unknown."""

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self) -> None:
        if self.month is None and self.day is not None:
            raise ValidationError("day given without month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValidationError(f"month out of range: {self.month}")
        if self.day is not None:
            last = calendar.monthrange(self.year, self.month)[1]
            if not 1 <= self.day <= last:
                raise ValidationError(f"day out of range: {self.year}-{self.month}-{self.day}")

    @property
    def precision(self) -> Precision:
        if self.month is None:
            return Precision.YEAR
        if self.day is None:
            return Precision.MONTH
        return Precision.DAY

    def sort_key(self) -> tuple[int, int, int]:
        return (self.year, self.month or 0, self.day or 0)

    @classmethod
    def parse(cls, text: str) -> "PartialDate":
        m = _DATE_RE.match(str(text).strip())
        if not m:
            raise ValidationError(f"bad date: {text!r}")
        y, mo, d = m.groups()
        return cls(int(y), int(mo) if mo else None, int(d) if d else None)

    def isoformat(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"

    def __str__(self) -> str:
        return self.isoformat()


@dataclass(frozen=True)
class MeshTerm:
    """A MeSH heading, stored as "Descriptor" or "Descriptor/qualifier"."""

    term: str
    major: bool = False

    @property
    def descriptor(self) -> str:
        return self.term.split("/", 1)[0]

    @property
    def qualifier(self) -> str | None:
        parts = self.term.split("/", 1)
        return parts[1] if len(parts) == 2 else None


@dataclass(frozen=True)
class ExpertRecommendation:
    expert_id: str
    tags: frozenset[RecommendationTag]
    date: PartialDate | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tags", frozenset(self.tags))
        if not self.tags:
            raise ValidationError("recommendation must carry at least one tag")


@dataclass(frozen=True)
class CitingSentence:
    text: str
    citing_pmid: str
    citing_date: PartialDate

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValidationError("citing sentence text is empty")


@dataclass(frozen=True)
class ArticleRecord:
    pmid: str
    title: str = ""
    abstract: str = ""  # "" marks a missing abstract
    pub_date: PartialDate | None = None
    mesh_terms: tuple[MeshTerm, ...] = ()
    recommendations: tuple[ExpertRecommendation, ...] = ()
    citances: tuple[CitingSentence, ...] = ()
    journal: str = ""
    publication_types: tuple[str, ...] = ()
    label: "Label | None" = None

    def __post_init__(self) -> None:
        for name in ("mesh_terms", "recommendations", "citances", "publication_types"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


class LabelKind(Enum):
    Transformative = "Transformative"
    Incremental = "Incremental"
    Excluded = "Excluded"


class ExclusionReason(Enum):
    Conflict = "Conflict"
    InsufficientExperts = "InsufficientExperts"
    NoLabelingTags = "NoLabelingTags"


@dataclass(frozen=True)
class Label:
    kind: LabelKind
    reason: ExclusionReason | None = None

    def __post_init__(self) -> None:
        if (self.kind is LabelKind.Excluded) != (self.reason is not None):
            raise ValidationError("Excluded labels carry a reason, the others do not")

    @classmethod
    def excluded(cls, reason: ExclusionReason) -> "Label":
        return cls(LabelKind.Excluded, reason)

    @property
    def is_positive(self) -> bool:
        return self.kind is LabelKind.Transformative

    def format(self) -> str:
        if self.reason is None:
            return self.kind.value
        return f"Excluded({self.reason.value})"

    @classmethod
    def parse(cls, text: str) -> "Label":
        m = re.fullmatch(r"Excluded\((\w+)\)", text.strip())
        if m:
            try:
                return cls.excluded(ExclusionReason(m.group(1)))
            except ValueError:
                raise ValidationError(f"unknown exclusion reason: {text!r}") from None
        try:
            kind = LabelKind(text.strip())
        except ValueError:
            raise ValidationError(f"unknown label: {text!r}") from None
        return cls(kind)

    def __str__(self) -> str:
        return self.format()


TRANSFORMATIVE = Label(LabelKind.Transformative)
INCREMENTAL = Label(LabelKind.Incremental)


def assign_label(recs: Iterable[ExpertRecommendation]) -> Label:
    """Label a study from its expert recommendations.

    Any mixture of transformative and incremental tags excludes the study.
    Otherwise at least two distinct experts must back the same class.
    """
    t_experts: set[str] = set()
    i_experts: set[str] = set()
    for rec in recs:
        if rec.tags & T_TAGS:
            t_experts.add(rec.expert_id)
        if rec.tags & I_TAGS:
            i_experts.add(rec.expert_id)
    if t_experts and i_experts:
        return Label.excluded(ExclusionReason.Conflict)
    if len(t_experts) >= 2:
        return TRANSFORMATIVE
    if len(i_experts) >= 2:
        return INCREMENTAL
    if not t_experts and not i_experts:
        return Label.excluded(ExclusionReason.NoLabelingTags)
    return Label.excluded(ExclusionReason.InsufficientExperts)


def _months(d: PartialDate) -> int:
    return d.year * 12 + (d.month or 1) - 1


def _add_months(d: PartialDate, n: int) -> tuple[int, int, int]:
    total = _months(d) + n
    year, month0 = divmod(total, 12)
    day = min(d.day or 1, calendar.monthrange(year, month0 + 1)[1])
    return (year, month0 + 1, day)


def in_window(pub: PartialDate, cite: PartialDate, window_months: int) -> bool:
    """Whether a citation date falls in [pub, pub + window_months)."""
    if pub.precision is Precision.YEAR or cite.precision is Precision.YEAR:
        # Keep when some month pair is in range: offsets span 12k-11 .. 12k+11.
        k = cite.year - pub.year
        return k >= 0 and 12 * k - 11 < window_months
    if pub.precision is Precision.MONTH or cite.precision is Precision.MONTH:
        delta = _months(cite) - _months(pub)
        return 0 <= delta < window_months
    return pub.sort_key() <= cite.sort_key() < _add_months(pub, window_months)


def window_citances(article: ArticleRecord, window_months: int = 24) -> list[CitingSentence]:
    if window_months <= 0:
        raise ValidationError("window_months must be positive")
    if article.pub_date is None:
        raise MissingDate(f"article {article.pmid} has no publication date")
    return [c for c in article.citances if in_window(article.pub_date, c.citing_date, window_months)]


def concat_citances(citances: Sequence[CitingSentence]) -> str:
    order = sorted(
        range(len(citances)),
        key=lambda i: (citances[i].citing_date.sort_key(), citances[i].citing_pmid, i),
    )
    return " ".join(citances[i].text.strip() for i in order)


def is_clinical(article: ArticleRecord) -> bool:
    text = f"{article.title} {article.abstract}".lower()
    if "clinical" in text and "trial" in text:
        return True
    if "random" in text:
        return True
    for mt in article.mesh_terms:
        desc = mt.descriptor.strip().lower()
        if desc.startswith("clinical trial") or desc == "random allocation":
            return True
        if (mt.qualifier or "").strip().lower() == "therapeutic use":
            return True
    return any("clinical trial" in pt.lower() for pt in article.publication_types)


@dataclass
class FilterResult:
    """Labeled, windowed records and the count removed at each step."""

    kept: list[ArticleRecord]
    total: int
    removed: dict[str, int] = field(default_factory=dict)

    def check(self) -> bool:
        return self.total == len(self.kept) + sum(self.removed.values())


def filter_corpus(records: Iterable[ArticleRecord], window_months: int = 24) -> FilterResult:
    """Label, drop conflicts and weakly backed studies, then drop studies
    without an abstract or without citances inside the window.

    Surviving records carry their label and only the windowed citances.
    """
    removed = {
        "conflict": 0,
        "insufficient_experts": 0,
        "no_labeling_tags": 0,
        "no_abstract": 0,
        "missing_date": 0,
        "no_citances": 0,
    }
    key_of = {
        ExclusionReason.Conflict: "conflict",
        ExclusionReason.InsufficientExperts: "insufficient_experts",
        ExclusionReason.NoLabelingTags: "no_labeling_tags",
    }
    kept: list[ArticleRecord] = []
    total = 0
    for rec in records:
        total += 1
        label = assign_label(rec.recommendations)
        if label.reason is not None:
            removed[key_of[label.reason]] += 1
            continue
        if not rec.abstract.strip():
            removed["no_abstract"] += 1
            continue
        if rec.pub_date is None:
            removed["missing_date"] += 1
            continue
        windowed = window_citances(rec, window_months)
        if not windowed:
            removed["no_citances"] += 1
            continue
        kept.append(replace(rec, label=label, citances=tuple(windowed)))
    return FilterResult(kept=kept, total=total, removed=removed)


# JSON mapping ---------------------------------------------------------------


def _date_or_none(value: Any, fld: str) -> PartialDate | None:
    if value is None or value == "":
        return None
    try:
        return PartialDate.parse(value)
    except ValidationError as exc:
        raise SchemaError(str(exc), field=fld) from None


def record_to_dict(rec: ArticleRecord) -> dict[str, Any]:
    out: dict[str, Any] = {
        "pmid": rec.pmid,
        "title": rec.title,
        "abstract": rec.abstract,
        "pub_date": rec.pub_date.isoformat() if rec.pub_date else None,
        "mesh_terms": [{"term": m.term, "major": m.major} for m in rec.mesh_terms],
        "recommendations": [
            {
                "expert_id": r.expert_id,
                "tags": sorted(t.value for t in r.tags),
                "date": r.date.isoformat() if r.date else None,
            }
            for r in rec.recommendations
        ],
        "citances": [
            {"text": c.text, "citing_pmid": c.citing_pmid, "citing_date": c.citing_date.isoformat()}
            for c in rec.citances
        ],
    }
    if rec.journal:
        out["journal"] = rec.journal
    if rec.publication_types:
        out["publication_types"] = list(rec.publication_types)
    if rec.label is not None:
        out["label"] = rec.label.format()
    return out


def _req(obj: Mapping[str, Any], key: str, prefix: str = "") -> Any:
    if key not in obj:
        raise SchemaError("missing field", field=prefix + key)
    return obj[key]


def record_from_dict(obj: Mapping[str, Any]) -> ArticleRecord:
    """Build a record from its JSON form; raises SchemaError naming the bad field."""
    if not isinstance(obj, Mapping):
        raise SchemaError("record is not an object")
    pmid = _req(obj, "pmid")
    if not isinstance(pmid, (str, int)) or not str(pmid).strip():
        raise SchemaError("pmid must be a non-empty string", field="pmid")
    try:
        mesh = tuple(
            MeshTerm(str(_req(m, "term", "mesh_terms.")), bool(m.get("major", False)))
            for m in obj.get("mesh_terms") or []
        )
        recs = []
        for r in obj.get("recommendations") or []:
            tags = frozenset(RecommendationTag.parse(t) for t in _req(r, "tags", "recommendations."))
            if not tags:
                raise SchemaError("empty tag set", field="recommendations.tags")
            recs.append(
                ExpertRecommendation(
                    str(_req(r, "expert_id", "recommendations.")),
                    tags,
                    _date_or_none(r.get("date"), "recommendations.date"),
                )
            )
        cits = []
        for c in obj.get("citances") or []:
            d = _date_or_none(_req(c, "citing_date", "citances."), "citances.citing_date")
            if d is None:
                raise SchemaError("missing date", field="citances.citing_date")
            text = _req(c, "text", "citances.")
            if not isinstance(text, str) or not text.strip():
                raise SchemaError("empty text", field="citances.text")
            cits.append(CitingSentence(text, str(_req(c, "citing_pmid", "citances.")), d))
        label = obj.get("label")
        return ArticleRecord(
            pmid=str(pmid),
            title=str(obj.get("title") or ""),
            abstract=str(obj.get("abstract") or ""),
            pub_date=_date_or_none(obj.get("pub_date"), "pub_date"),
            mesh_terms=mesh,
            recommendations=tuple(recs),
            citances=tuple(cits),
            journal=str(obj.get("journal") or ""),
            publication_types=tuple(str(p) for p in obj.get("publication_types") or []),
            label=Label.parse(label) if label else None,
        )
    except SchemaError:
        raise
    except ValidationError as exc:
        raise SchemaError(str(exc)) from None
    except (TypeError, AttributeError) as exc:
        raise SchemaError(f"malformed record: {exc}") from None
