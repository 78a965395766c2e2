"""Tokenization and Penn Treebank part-of-speech tagging.

The tagger is a greedy averaged perceptron in the style popularised by
Honnibal's "A good part-of-speech tagger in about 200 lines of Python".
A small tagged corpus written for this package ships in ``data/`` together
with a model trained on it, so tagging works without any downloads.
"""

from __future__ import annotations

import logging
import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyCorpus, EmptyTraining, SchemaError, UntrainedModel

log = logging.getLogger(__name__)

# Closed tagset, in the column order used by the POS feature block.
TAGSET: tuple[str, ...] = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
    "NN", "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
    "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ",
    "WDT", "WP", "WP$", "WRB",
    "$", "#", "``", "''", "-LRB-", "-RRB-", ",", ".", ":",
)
_TAG_INDEX = {t: i for i, t in enumerate(TAGSET)}

PUNCTUATION = frozenset(".,;:!?()[]\"'{}“”‘’")

_START = ("-START-", "-START2-")
_END = ("-END-", "-END2-")

MODEL_HEADER = "#evidencer-tagger\t1"


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class TaggedToken:
    token: Token
    tag: str


def tokenize(text: str) -> list[Token]:
    """Split ``text`` on whitespace, peeling edge punctuation into tokens.

    Offsets are character offsets, so ``text[t.start:t.end] == t.surface``.
    Interior punctuation is kept, which leaves "Barrett's", "32+0-33+6" and
    "3.5" whole.
    """
    tokens: list[Token] = []
    for m in re.finditer(r"\S+", text):
        chunk, base = m.group(), m.start()
        lo, hi = 0, len(chunk)
        while lo < hi and chunk[lo] in PUNCTUATION:
            lo += 1
        while hi > lo and chunk[hi - 1] in PUNCTUATION:
            hi -= 1
        for i in range(lo):
            tokens.append(Token(chunk[i], base + i, base + i + 1))
        if hi > lo:
            tokens.append(Token(chunk[lo:hi], base + lo, base + hi))
        for i in range(hi, len(chunk)):
            tokens.append(Token(chunk[i], base + i, base + i + 1))
    return tokens


def is_punct(surface: str) -> bool:
    return all(ch in PUNCTUATION for ch in surface)


# Penn Treebank tags for punctuation tokens; these never reach the perceptron.
_PUNCT_TAGS = {
    ".": ".", "!": ".", "?": ".", ",": ",", ";": ":", ":": ":",
    "(": "-LRB-", "[": "-LRB-", "{": "-LRB-",
    ")": "-RRB-", "]": "-RRB-", "}": "-RRB-",
    "“": "``", "‘": "``", "”": "''", "’": "''",
}


def _punct_tag(surface: str, prev_tag: str) -> str | None:
    if surface in _PUNCT_TAGS:
        return _PUNCT_TAGS[surface]
    if surface in ('"', "'"):
        # closing quote if the previous token was a word
        return "''" if prev_tag not in _START and prev_tag != "``" else "``"
    return None


@dataclass
class TaggerModel:
    """Averaged-perceptron weights plus a dictionary of unambiguous words."""

    weights: dict[str, dict[str, float]] = field(default_factory=dict)
    tagdict: dict[str, str] = field(default_factory=dict)
    iterations: int = 0

    @property
    def trained(self) -> bool:
        return bool(self.weights)

    def predict(self, features: Iterable[str]) -> str:
        scores: dict[str, float] = defaultdict(float)
        weights = self.weights
        for feat in features:
            row = weights.get(feat)
            if row:
                for tag, w in row.items():
                    scores[tag] += w
        # ties resolved by tagset order so decoding is platform independent
        return max(TAGSET, key=lambda t: (scores.get(t, 0.0), -_TAG_INDEX[t]))

    def tag_words(self, words: Sequence[str]) -> list[str]:
        if not self.trained:
            raise UntrainedModel("tagger has no weights; train or load a model first")
        context = [*_START, *(_normalize(w) for w in words), *_END]
        prev, prev2 = _START[0], _START[1]
        tags = []
        for i, word in enumerate(words):
            tag = _punct_tag(word, prev) or self.tagdict.get(word)
            if tag is None:
                tag = self.predict(_features(i, word, context, prev, prev2))
            tags.append(tag)
            prev2, prev = prev, tag
        return tags

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{MODEL_HEADER}\n#iterations\t{self.iterations}\n")
            for word in sorted(self.tagdict):
                fh.write(f"@dict\t{word}\t{self.tagdict[word]}\n")
            for feat in sorted(self.weights):
                row = self.weights[feat]
                for tag in sorted(row):
                    fh.write(f"{feat}\t{tag}\t{row[tag]!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> TaggerModel:
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def loads(cls, text: str) -> TaggerModel:
        lines = text.splitlines()
        if not lines or lines[0] != MODEL_HEADER:
            raise SchemaError("not an evidencer tagger model", line=1)
        model = cls()
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split("\t")
            if len(parts) == 2 and parts[0] == "#iterations":
                model.iterations = int(parts[1])
            elif len(parts) == 3 and parts[0] == "@dict":
                model.tagdict[parts[1]] = parts[2]
            elif len(parts) == 3:
                feat, tag, w = parts
                if tag not in _TAG_INDEX:
                    raise SchemaError(f"unknown tag {tag!r}", line=lineno, field="tag")
                model.weights.setdefault(feat, {})[tag] = float(w)
            elif line:
                raise SchemaError("expected feature<TAB>tag<TAB>weight", line=lineno)
        return model


def _normalize(word: str) -> str:
    return word.lower()


def _features(i: int, word: str, context: Sequence[str], prev: str, prev2: str) -> list[str]:
    # context is padded with two start symbols, hence the +2 offsets
    lower = context[i + 2]
    feats = [
        "bias",
        "w=" + word,
        "lw=" + lower,
        "s1=" + lower[-1:],
        "s2=" + lower[-2:],
        "s3=" + lower[-3:],
        "p1=" + prev,
        "p2=" + prev2,
        "pw=" + context[i + 1],
        "nw=" + context[i + 3],
    ]
    if word[:1].isupper():
        feats.append("shape=cap")
    if any(ch.isdigit() for ch in word):
        feats.append("shape=digit")
    if "-" in word:
        feats.append("shape=hyph")
    return feats


def pos_tag(tokens: Sequence[Token], model: TaggerModel) -> list[TaggedToken]:
    tags = model.tag_words([t.surface for t in tokens])
    return [TaggedToken(tok, tag) for tok, tag in zip(tokens, tags)]


class _Averager:
    """Bookkeeping for weight averaging with lazy timestamp updates."""

    def __init__(self) -> None:
        self.weights: dict[str, dict[str, float]] = {}
        self.totals: dict[tuple[str, str], float] = defaultdict(float)
        self.stamps: dict[tuple[str, str], int] = defaultdict(int)
        self.i = 0

    def update(self, truth: str, guess: str, features: Iterable[str]) -> None:
        self.i += 1
        if truth == guess:
            return
        for f in features:
            row = self.weights.setdefault(f, {})
            self._bump(f, truth, row, 1.0)
            self._bump(f, guess, row, -1.0)

    def _bump(self, f: str, tag: str, row: dict[str, float], delta: float) -> None:
        key = (f, tag)
        w = row.get(tag, 0.0)
        self.totals[key] += (self.i - self.stamps[key]) * w
        self.stamps[key] = self.i
        row[tag] = w + delta

    def averaged(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for f, row in self.weights.items():
            new_row = {}
            for tag, w in row.items():
                key = (f, tag)
                total = self.totals[key] + (self.i - self.stamps[key]) * w
                avg = round(total / self.i, 6)
                if avg:
                    new_row[tag] = avg
            if new_row:
                out[f] = new_row
        return out


def build_tagdict(
    sentences: Sequence[Sequence[tuple[str, str]]],
    freq_threshold: int = 5,
    ambiguity_threshold: float = 0.97,
) -> dict[str, str]:
    counts: dict[str, Counter] = defaultdict(Counter)
    for sent in sentences:
        for word, tag in sent:
            counts[word][tag] += 1
    tagdict = {}
    for word, tag_counts in counts.items():
        tag, mode = tag_counts.most_common(1)[0]
        n = sum(tag_counts.values())
        if n >= freq_threshold and mode / n >= ambiguity_threshold:
            tagdict[word] = tag
    return tagdict


def train_tagger(
    tagged_corpus: Sequence[Sequence[TaggedToken | tuple[str, str]]],
    iterations: int = 5,
    seed: int = 0,
    freq_threshold: int = 5,
    ambiguity_threshold: float = 0.97,
) -> TaggerModel:
    """Train an averaged perceptron; identical inputs give identical weights."""
    if iterations < 1:
        raise EmptyTraining(f"iterations must be >= 1, got {iterations}")
    sentences = [[_pair(t) for t in sent] for sent in tagged_corpus if len(sent)]
    if not sentences:
        raise EmptyCorpus("tagged corpus is empty")
    for sent in sentences:
        for _, tag in sent:
            if tag not in _TAG_INDEX:
                raise SchemaError(f"tag {tag!r} is not in the closed tagset", field="tag")

    model = TaggerModel(tagdict=build_tagdict(sentences, freq_threshold, ambiguity_threshold))
    avg = _Averager()
    rng = random.Random(seed)
    order = list(range(len(sentences)))
    for _ in range(iterations):
        for idx in order:
            words = [w for w, _ in sentences[idx]]
            context = [*_START, *(_normalize(w) for w in words), *_END]
            prev, prev2 = _START[0], _START[1]
            for i, (word, truth) in enumerate(sentences[idx]):
                guess = _punct_tag(word, prev) or model.tagdict.get(word)
                if guess is None:
                    feats = _features(i, word, context, prev, prev2)
                    model.weights = avg.weights
                    guess = model.predict(feats)
                    avg.update(truth, guess, feats)
                prev2, prev = prev, guess
        rng.shuffle(order)
    model.weights = avg.averaged()
    model.iterations = iterations
    return model


def _pair(t: TaggedToken | tuple[str, str]) -> tuple[str, str]:
    if isinstance(t, TaggedToken):
        return t.token.surface, t.tag
    return t[0], t[1]


def tag_histogram(tagged: Sequence[TaggedToken | str], normalize: bool = True) -> dict[str, float]:
    """Relative frequency of every tag in the closed tagset.

    With ``normalize=False`` the raw counts are returned instead.
    """
    counts = Counter(t.tag if isinstance(t, TaggedToken) else t for t in tagged)
    total = sum(counts.values())
    if not normalize or total == 0:
        return {tag: float(counts.get(tag, 0)) for tag in TAGSET}
    return {tag: counts.get(tag, 0) / total for tag in TAGSET}


def parse_pretagged(text: str) -> list[list[tuple[str, str]]]:
    """Read "token_TAG" items, one sentence per line."""
    sentences = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        items = line.split()
        if not items:
            continue
        sent = []
        for item in items:
            word, sep, tag = item.rpartition("_")
            if not sep or not word:
                raise SchemaError(f"malformed item {item!r}", line=lineno)
            if tag not in _TAG_INDEX:
                raise SchemaError(f"unknown tag {tag!r}", line=lineno, field="tag")
            sent.append((word, tag))
        sentences.append(sent)
    return sentences


def format_pretagged(sentences: Iterable[Sequence[tuple[str, str]]]) -> str:
    return "".join(" ".join(f"{w}_{t}" for w, t in sent) + "\n" for sent in sentences)


def load_fixture() -> list[list[tuple[str, str]]]:
    """The bundled tagged corpus."""
    text = resources.files("evidencer.data").joinpath("tagged_sentences.txt").read_text("utf-8")
    return parse_pretagged(text)


_default_model: TaggerModel | None = None


def default_tagger() -> TaggerModel:
    """Model trained on the bundled fixture, loaded once per process."""
    global _default_model
    if _default_model is None:
        text = resources.files("evidencer.data").joinpath("tagger_model.tsv").read_text("utf-8")
        _default_model = TaggerModel.loads(text)
    return _default_model


def tagging_accuracy(model: TaggerModel, sentences: Sequence[Sequence[tuple[str, str]]]) -> float:
    """Token-level accuracy of ``model`` against gold (word, tag) sentences."""
    right = total = 0
    for sent in sentences:
        words = [w for w, _ in sent]
        for guess, (_, gold) in zip(model.tag_words(words), sent):
            right += guess == gold
            total += 1
    if total == 0:
        raise EmptyCorpus("no tokens to score")
    return right / total


def holdout_split(
    sentences: Sequence[Sequence[tuple[str, str]]], every: int = 5
) -> tuple[list[Sequence[tuple[str, str]]], list[Sequence[tuple[str, str]]]]:
    """Deterministic split: every ``every``-th sentence is held out."""
    train = [s for i, s in enumerate(sentences) if i % every != every - 1]
    test = [s for i, s in enumerate(sentences) if i % every == every - 1]
    return train, test
