"""Colil SPARQL client for citing sentences.

The query returns one binding per citation context with the variables
``context``, ``citing`` and optionally ``date``.  The vocabulary below is
an assumed shape; pass another template with a ``{pmid}`` placeholder if
the endpoint differs.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Callable

from ..corpus import CitingSentence, PartialDate
from ..errors import EvidencerError, MalformedResponse, ValidationError
from .eutils import check_pmid
from .http import FetchConfig, HttpClient, RawFetchResult, now_utc

log = logging.getLogger(__name__)

DEFAULT_QUERY = """\
PREFIX colil: <http://purl.jp/bio/10/colil/ontology/201303#>
PREFIX bibo: <http://purl.org/ontology/bibo/>
PREFIX dcterms: <http://purl.org/dc/terms/>
SELECT ?context ?citing ?date WHERE {{
  ?cited bibo:pmid "{pmid}" .
  ?citing colil:Contexts ?ctx .
  ?ctx colil:mentions ?cited ;
       colil:context ?context .
  OPTIONAL {{ ?citing dcterms:issued ?date }}
}}
"""
SPARQL_JSON = "application/sparql-results+json"
_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?")


def citing_id(value: str) -> str:
    """PMID (or last path segment) of a citing-paper URI or literal."""
    m = re.search(r"(\d+)\D*$", value)
    if m:
        return m.group(1)
    return value.rstrip("/").rsplit("/", 1)[-1]


def parse_date(value: str) -> PartialDate | None:
    m = _DATE_RE.match(value.strip())
    if not m:
        return None
    y, mo, d = m.groups()
    try:
        return PartialDate(int(y), int(mo) if mo else None, int(d) if d else None)
    except ValidationError:
        return PartialDate(int(y))


@dataclass
class CitanceBatch:
    citances: list[CitingSentence]
    dropped: int = 0
    duplicates: int = 0


def parse_sparql_json(
    payload: bytes | str,
    date_lookup: Callable[[str], PartialDate | None] | None = None,
) -> CitanceBatch:
    """SPARQL JSON results to citing sentences.

    Identical (text, citing id) pairs are kept once.  A binding without a
    date falls back to the citing article's year via ``date_lookup``; if that
    fails too the binding is dropped and counted.
    """
    try:
        doc = json.loads(payload)
        bindings = doc["results"]["bindings"]
    except (ValueError, TypeError, KeyError) as exc:
        raise MalformedResponse(f"not a SPARQL JSON result: {exc}") from None
    if not isinstance(bindings, list):
        raise MalformedResponse("results.bindings is not a list")

    seen: set[tuple[str, str]] = set()
    out: list[CitingSentence] = []
    dropped = dups = 0
    for b in bindings:
        try:
            text = " ".join(str(b["context"]["value"]).split())
            citing = citing_id(str(b["citing"]["value"]))
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"binding lacks {exc}") from None
        if not text:
            dropped += 1
            continue
        key = (text, citing)
        if key in seen:
            dups += 1
            continue
        seen.add(key)
        date = None
        raw = (b.get("date") or {}).get("value")
        if raw:
            date = parse_date(str(raw))
        if date is None and date_lookup is not None:
            try:
                found = date_lookup(citing)
            except EvidencerError as exc:
                log.debug("date lookup for %s failed: %s", citing, exc)
                found = None
            if found is not None:
                date = PartialDate(found.year)
        if date is None:
            dropped += 1
            continue
        out.append(CitingSentence(text, citing, date))
    if dropped:
        log.warning("dropped %d citing sentence(s) without a usable date or text", dropped)
    return CitanceBatch(out, dropped, dups)


@dataclass
class ColilClient:
    config: FetchConfig = field(default_factory=FetchConfig)
    http: HttpClient | None = None
    query_template: str = DEFAULT_QUERY
    date_lookup: Callable[[str], PartialDate | None] | None = None
    dropped: int = 0

    def __post_init__(self) -> None:
        if self.http is None:
            self.http = HttpClient(self.config)

    def query(self, pmid: str) -> str:
        return self.query_template.format(pmid=pmid)

    def fetch_raw(self, pmid: str | int) -> RawFetchResult:
        pmid = check_pmid(pmid)
        payload = self.http.get(
            self.config.colil_endpoint_url,
            params={"query": self.query(pmid), "format": "json"},
            headers={"Accept": SPARQL_JSON},
        )
        if not payload.strip():
            raise MalformedResponse(f"empty SPARQL response for {pmid}")
        return RawFetchResult(pmid, payload, now_utc(), "colil")

    def fetch_citances(self, pmid: str | int) -> list[CitingSentence]:
        raw = self.fetch_raw(pmid)
        batch = parse_sparql_json(raw.payload, self.date_lookup)
        self.dropped += batch.dropped
        return batch.citances


def fetch_citances(
    pmid: str | int,
    cfg: FetchConfig | None = None,
    http: HttpClient | None = None,
    date_lookup: Callable[[str], PartialDate | None] | None = None,
) -> list[CitingSentence]:
    return ColilClient(cfg or FetchConfig(), http, date_lookup=date_lookup).fetch_citances(pmid)
