"""Clients for PubMed E-utilities and Colil, plus the corpus store."""
from __future__ import annotations

from .colil import ColilClient, DEFAULT_QUERY, fetch_citances, parse_sparql_json
from .eutils import EutilsClient, check_pmid, fetch_article, parse_pubmed_xml
from .fixtures import FixtureSession
from .http import FetchConfig, HttpClient, RateLimiter, RawFetchResult
from .store import load_corpus, save_corpus

__all__ = [
    "ColilClient",
    "DEFAULT_QUERY",
    "EutilsClient",
    "FetchConfig",
    "FixtureSession",
    "HttpClient",
    "RateLimiter",
    "RawFetchResult",
    "check_pmid",
    "fetch_article",
    "fetch_citances",
    "load_corpus",
    "parse_pubmed_xml",
    "parse_sparql_json",
    "save_corpus",
]
