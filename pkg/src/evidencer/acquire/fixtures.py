"""Offline session serving recorded responses from a directory.

Layout: ``{pmid}.xml`` holds the efetch body for a PMID and ``{pmid}.srj``
the SPARQL JSON result for its citing sentences.  Unknown PMIDs yield an
empty PubmedArticleSet or an empty binding list, mirroring the live
services.  Every request is recorded in ``calls``.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

EMPTY_SET = b'<?xml version="1.0" ?>\n<PubmedArticleSet></PubmedArticleSet>\n'
EMPTY_SRJ = b'{"head": {"vars": ["context", "citing", "date"]}, "results": {"bindings": []}}\n'
_QUERY_PMID = re.compile(r"pmid\D{0,5}(\d+)", re.IGNORECASE)


@dataclass
class FixtureResponse:
    status_code: int
    content: bytes
    headers: dict[str, str] = field(default_factory=dict)

    @property
    def text(self) -> str:
        return self.content.decode("utf-8")


class FixtureSession:
    def __init__(self, root: str | os.PathLike[str]) -> None:
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"fixture directory {self.root} does not exist")
        self.calls: list[tuple[str, dict[str, Any]]] = []

    def _read(self, name: str, empty: bytes) -> FixtureResponse:
        path = self.root / name
        if path.is_file():
            return FixtureResponse(200, path.read_bytes())
        return FixtureResponse(200, empty)

    def get(self, url: str, params: Mapping[str, Any] | None = None, **kwargs: Any) -> FixtureResponse:
        params = dict(params or {})
        self.calls.append((url, params))
        if "id" in params:
            return self._read(f"{params['id']}.xml", EMPTY_SET)
        if "query" in params:
            m = _QUERY_PMID.search(str(params["query"]))
            if m is None:
                return FixtureResponse(400, b"query names no pmid")
            return self._read(f"{m.group(1)}.srj", EMPTY_SRJ)
        return FixtureResponse(400, b"unsupported request")
