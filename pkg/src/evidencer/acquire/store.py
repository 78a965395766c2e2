"""JSON Lines corpus store, one record per line, UTF-8."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable

from ..corpus import ArticleRecord, record_from_dict, record_to_dict
from ..errors import SchemaError


def dumps_record(rec: ArticleRecord) -> str:
    return json.dumps(record_to_dict(rec), ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def save_corpus(records: Iterable[ArticleRecord], path: str | os.PathLike[str]) -> int:
    """Write records atomically; returns the number written."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec))
            fh.write("\n")
            n += 1
    os.replace(tmp, path)
    return n


def load_corpus(path: str | os.PathLike[str]) -> list[ArticleRecord]:
    """Read a corpus; blank lines are skipped, bad lines raise SchemaError with their number."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON ({exc.msg})", line=lineno) from None
            try:
                out.append(record_from_dict(obj))
            except SchemaError as exc:
                raise SchemaError(exc.message, line=lineno, field=exc.field) from None
    return out
