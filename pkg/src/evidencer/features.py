"""N-gram vectorization and per-document feature assembly.

A document's feature row is its n-gram block (raw counts or tf*ln(N/df)),
followed by the POS-tag histogram in TAGSET order and the sentiment
compound score.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import ArticleRecord, concat_citances, window_citances
from .errors import EmptyCorpus, EmptyText, ValidationError
from .lingua import TAGSET, TaggerModel, Token, is_punct, pos_tag, tag_histogram, tokenize
from .sentiment import SentimentLexicon, compound_of

POS_PREFIX = "__POS_"
COMPOUND_NAME = "__COMPOUND"


class VectorizerMode(Enum):
    Count = "count"
    Tfidf = "tfidf"


class Source(Enum):
    citances = "citances"
    abstract = "abstract"
    both = "both"


def ngram_words(tokens: Sequence[Token | str]) -> list[str]:
    """Lowercased word surfaces with punctuation tokens removed."""
    out = []
    for t in tokens:
        s = t.surface if isinstance(t, Token) else t
        if not is_punct(s):
            out.append(s.lower())
    return out


def extract_ngrams(tokens: Sequence[str], n_min: int = 1, n_max: int = 3) -> Counter[str]:
    if not 1 <= n_min <= n_max:
        raise ValidationError(f"bad n-gram range ({n_min}, {n_max})")
    words = [w.lower() for w in tokens]
    grams: Counter[str] = Counter()
    for n in range(n_min, n_max + 1):
        for i in range(len(words) - n + 1):
            grams[" ".join(words[i : i + n])] += 1
    return grams


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    df: tuple[int, ...]
    n_docs: int
    index: Mapping[str, int] = field(compare=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index:
            object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def idf(self) -> np.ndarray:
        return np.log(self.n_docs / np.asarray(self.df, dtype=np.float64))


def fit_vocabulary(docs: Sequence[Mapping[str, int]], min_df: int = 1) -> Vocabulary:
    """Terms with document frequency >= min_df, columns in lexicographic order."""
    if not docs:
        raise EmptyCorpus("cannot fit a vocabulary on zero documents")
    df: Counter[str] = Counter()
    for d in docs:
        df.update(t for t, c in d.items() if c > 0)
    terms = sorted(t for t, c in df.items() if c >= min_df)
    return Vocabulary(tuple(terms), tuple(df[t] for t in terms), len(docs))


@dataclass(frozen=True)
class SparseVector:
    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValidationError("indices and values differ in length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValidationError("indices must be strictly increasing")
        if self.indices and not (0 <= self.indices[0] and self.indices[-1] < self.dim):
            raise ValidationError("index out of range")

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[list(self.indices)] = self.values
        return out


def transform(doc: Mapping[str, int], vocab: Vocabulary, mode: VectorizerMode = VectorizerMode.Count) -> SparseVector:
    pairs = sorted((vocab.index[t], c) for t, c in doc.items() if c > 0 and t in vocab.index)
    idx: list[int] = []
    vals: list[float] = []
    for j, tf in pairs:
        v = float(tf)
        if mode is VectorizerMode.Tfidf:
            v = tf * math.log(vocab.n_docs / vocab.df[j])
        if v != 0.0:
            idx.append(j)
            vals.append(v)
    return SparseVector(tuple(idx), tuple(vals), len(vocab))


def transform_many(docs: Sequence[Mapping[str, int]], vocab: Vocabulary, mode: VectorizerMode) -> np.ndarray:
    """Dense document-term matrix; same values as ``transform`` row by row."""
    out = np.zeros((len(docs), len(vocab)))
    for r, d in enumerate(docs):
        for t, c in d.items():
            j = vocab.index.get(t)
            if j is not None:
                out[r, j] = c
    if mode is VectorizerMode.Tfidf:
        out *= vocab.idf()
    return out


def source_parts(article: ArticleRecord, source: Source, window_months: int = 24) -> list[str]:
    """Texts feeding a document: windowed citances, abstract, or both."""
    parts = []
    if source in (Source.citances, Source.both):
        cits = window_citances(article, window_months) if article.pub_date else list(article.citances)
        parts.append(concat_citances(cits))
    if source in (Source.abstract, Source.both):
        parts.append(article.abstract.strip())
    parts = [p for p in parts if p]
    if not parts:
        raise EmptyText(f"article {article.pmid} has no {source.value} text")
    return parts


@dataclass(frozen=True)
class DocAnalysis:
    """Fold-independent pieces of a document: n-gram counts, POS histogram, compound."""

    terms: Counter
    pos: tuple[float, ...]
    compound: float


def analyze(
    parts: Sequence[str],
    tagger: TaggerModel,
    lexicon: SentimentLexicon,
    pos_counts: bool = False,
    per_sentence: bool = False,
) -> DocAnalysis:
    # n-grams never span the seam between two parts
    terms: Counter[str] = Counter()
    tagged = []
    for p in parts:
        toks = tokenize(p)
        terms.update(extract_ngrams(ngram_words(toks)))
        tagged.extend(pos_tag(toks, tagger))
    hist = tag_histogram(tagged, normalize=not pos_counts)
    text = " ".join(parts)
    return DocAnalysis(terms, tuple(hist[t] for t in TAGSET), compound_of(text, lexicon, per_sentence=per_sentence))


@dataclass(frozen=True)
class FeatureVector:
    ngram_block: SparseVector
    pos_block: tuple[float, ...]
    compound: float
    source: Source

    def to_dense(self) -> np.ndarray:
        return np.concatenate([self.ngram_block.to_dense(), np.asarray(self.pos_block), [self.compound]])


def assemble(
    article: ArticleRecord,
    source: Source,
    vocab: Vocabulary,
    tagger: TaggerModel,
    lexicon: SentimentLexicon,
    mode: VectorizerMode = VectorizerMode.Count,
    window_months: int = 24,
) -> FeatureVector:
    a = analyze(source_parts(article, source, window_months), tagger, lexicon)
    return FeatureVector(transform(a.terms, vocab, mode), a.pos, a.compound, source)


def feature_names(vocab: Vocabulary) -> list[str]:
    return list(vocab.terms) + [POS_PREFIX + t for t in TAGSET] + [COMPOUND_NAME]


def build_matrix(analyses: Sequence[DocAnalysis], vocab: Vocabulary, mode: VectorizerMode) -> np.ndarray:
    """Rows of [n-gram block | POS block | compound]."""
    ng = transform_many([a.terms for a in analyses], vocab, mode)
    pos = np.array([a.pos for a in analyses], dtype=np.float64).reshape(len(analyses), len(TAGSET))
    comp = np.array([[a.compound] for a in analyses], dtype=np.float64).reshape(len(analyses), 1)
    return np.hstack([ng, pos, comp])


def export_triplets(
    matrix: np.ndarray,
    vocab: Vocabulary,
    path: str | os.PathLike[str],
    vocab_path: str | os.PathLike[str] | None = None,
) -> None:
    """Write non-zero entries as "row col value" lines, and the column names
    as "index\\tterm\\tdf" lines (df is "-" for the POS and compound columns)."""
    names = feature_names(vocab)
    if matrix.shape[1] != len(names):
        raise ValidationError(f"matrix has {matrix.shape[1]} columns, expected {len(names)}")
    rows, cols = np.nonzero(matrix)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r, c in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{r} {c} {float(matrix[r, c])!r}\n")
    vp = vocab_path if vocab_path is not None else f"{os.fspath(path)}.vocab"
    with open(vp, "w", encoding="utf-8", newline="\n") as fh:
        for j, name in enumerate(names):
            df = str(vocab.df[j]) if j < len(vocab) else "-"
            fh.write(f"{j}\t{name}\t{df}\n")


def read_triplets(path: str | os.PathLike[str], shape: tuple[int, int]) -> np.ndarray:
    out = np.zeros(shape)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                r, c, v = line.split()
                out[int(r), int(c)] = float(v)
    return out


def analyses_for(
    records: Iterable[ArticleRecord],
    source: Source,
    tagger: TaggerModel,
    lexicon: SentimentLexicon,
    window_months: int = 24,
    pos_counts: bool = False,
    per_sentence: bool = False,
) -> list[DocAnalysis]:
    return [
        analyze(source_parts(r, source, window_months), tagger, lexicon, pos_counts, per_sentence)
        for r in records
    ]
