"""PubMed E-utilities client: title, abstract, dates, MeSH and journal."""
from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from ..corpus import ArticleRecord, MeshTerm, PartialDate
from ..errors import NotFound, ParseError, ValidationError
from .http import FetchConfig, HttpClient, RawFetchResult, now_utc

log = logging.getLogger(__name__)

MONTHS = {m: i for i, m in enumerate(
    ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"], start=1)}
PMID_RE = re.compile(r"^\d+$")


def check_pmid(pmid: str | int) -> str:
    s = str(pmid).strip()
    if not PMID_RE.match(s):
        raise ValidationError(f"invalid PMID {pmid!r}")
    return s


def _text(el: ET.Element | None) -> str:
    if el is None:
        return ""
    return " ".join("".join(el.itertext()).split())


def _month(text: str | None) -> int | None:
    if not text:
        return None
    t = text.strip().lower()
    if t.isdigit():
        m = int(t)
        return m if 1 <= m <= 12 else None
    return MONTHS.get(t[:3])


def _date_from(el: ET.Element | None) -> PartialDate | None:
    """PubDate / ArticleDate element to a PartialDate; MedlineDate as last resort."""
    if el is None:
        return None
    year = el.findtext("Year")
    if year and year.strip().isdigit():
        month = _month(el.findtext("Month") or el.findtext("Season"))
        day_s = el.findtext("Day")
        day = int(day_s) if month and day_s and day_s.strip().isdigit() else None
        try:
            return PartialDate(int(year), month, day)
        except ValidationError:
            return PartialDate(int(year), month)
    medline = el.findtext("MedlineDate")
    if medline:
        # e.g. "1998 Dec-1999 Jan" or "2000 Spring"
        m = re.match(r"\s*(\d{4})(?:\s+([A-Za-z]{3}))?", medline)
        if m:
            return PartialDate(int(m.group(1)), _month(m.group(2)))
    return None


def _mesh(article: ET.Element) -> tuple[MeshTerm, ...]:
    out = []
    for heading in article.iterfind(".//MeshHeadingList/MeshHeading"):
        desc = heading.find("DescriptorName")
        if desc is None:
            continue
        name = _text(desc)
        desc_major = desc.get("MajorTopicYN", "N") == "Y"
        quals = heading.findall("QualifierName")
        if not quals:
            out.append(MeshTerm(name, desc_major))
        for q in quals:
            out.append(MeshTerm(f"{name}/{_text(q)}", desc_major or q.get("MajorTopicYN", "N") == "Y"))
    return tuple(out)


def parse_pubmed_xml(payload: bytes | str, pmid: str | None = None) -> ArticleRecord:
    """Parse one efetch PubmedArticleSet.

    Labeled abstract sections are joined with single spaces and their labels
    dropped.  A missing Abstract gives ``abstract=""``.
    """
    try:
        root = ET.fromstring(payload)
    except ET.ParseError as exc:
        raise ParseError(f"malformed PubMed XML: {exc}") from None
    articles = root.findall(".//PubmedArticle") if root.tag != "PubmedArticle" else [root]
    if not articles:
        raise NotFound(f"PubMed returned no article for {pmid or '?'}")
    art = articles[0]
    if pmid is not None:
        for a in articles:
            if (a.findtext(".//MedlineCitation/PMID") or "").strip() == pmid:
                art = a
                break
    citation = art.find("MedlineCitation")
    if citation is None:
        raise ParseError("PubmedArticle without MedlineCitation")
    found = (citation.findtext("PMID") or "").strip()
    if not found:
        raise ParseError("MedlineCitation without PMID")
    article = citation.find("Article")
    if article is None:
        raise ParseError(f"PMID {found}: no Article element")

    sections = [_text(s) for s in article.iterfind("Abstract/AbstractText")]
    abstract = " ".join(s for s in sections if s)

    pub_date = _date_from(article.find("Journal/JournalIssue/PubDate"))
    if pub_date is None:
        pub_date = _date_from(article.find("ArticleDate"))
    if pub_date is None:
        log.warning("PMID %s: no usable publication date", found)

    journal = (article.findtext("Journal/ISOAbbreviation") or article.findtext("Journal/Title") or "").strip()
    ptypes = tuple(_text(p) for p in article.iterfind("PublicationTypeList/PublicationType"))
    return ArticleRecord(
        pmid=found,
        title=_text(article.find("ArticleTitle")),
        abstract=abstract,
        pub_date=pub_date,
        mesh_terms=_mesh(citation),
        journal=journal,
        publication_types=ptypes,
    )


@dataclass
class EutilsClient:
    config: FetchConfig = field(default_factory=FetchConfig)
    http: HttpClient | None = None

    def __post_init__(self) -> None:
        if self.http is None:
            self.http = HttpClient(self.config)

    def fetch_raw(self, pmid: str | int) -> RawFetchResult:
        pmid = check_pmid(pmid)
        params = {"db": "pubmed", "id": pmid, "retmode": "xml"}
        if self.config.api_key:
            params["api_key"] = self.config.api_key
        url = self.config.eutils_base_url.rstrip("/") + "/efetch.fcgi"
        payload = self.http.get(url, params=params)
        if not payload.strip():
            raise NotFound(f"PubMed returned an empty body for {pmid}")
        return RawFetchResult(pmid, payload, now_utc(), "eutils")

    def fetch_article(self, pmid: str | int) -> ArticleRecord:
        raw = self.fetch_raw(pmid)
        return parse_pubmed_xml(raw.payload, raw.pmid)

    def publication_date(self, pmid: str | int) -> PartialDate | None:
        return self.fetch_article(pmid).pub_date


def fetch_article(pmid: str | int, cfg: FetchConfig | None = None, http: HttpClient | None = None) -> ArticleRecord:
    cfg = cfg or FetchConfig()
    return EutilsClient(cfg, http).fetch_article(pmid)
