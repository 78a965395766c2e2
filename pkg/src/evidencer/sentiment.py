"""Rule-based valence scoring of free text.

Each word is looked up in a valence lexicon, then adjusted by a fixed rule
set (capital-letter emphasis, degree boosters, negation in a three-word
window, punctuation amplification).  The adjusted valences are summed and
squashed into a compound score with ``S / sqrt(S*S + alpha)``.
"""
from __future__ import annotations

import logging
import math
import os
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import EmptyLexicon

log = logging.getLogger(__name__)

ALPHA = 15.0
B_INCR = 0.293
B_DECR = -0.293
C_INCR = 0.733
N_SCALAR = -0.74
EP_WEIGHT = 0.292
EP_MAX = 4
QM_WEIGHT = 0.18
QM_CAP = 0.96
BUT_BEFORE = 0.5
BUT_AFTER = 1.5

NEGATIONS = frozenset(
    """aint arent cannot cant couldnt darent didnt doesnt ain't aren't can't couldn't
    daren't didn't doesn't dont hadnt hasnt havent isnt mightnt mustnt neither don't
    hadn't hasn't haven't isn't mightn't mustn't neednt needn't never none nope nor not
    nothing nowhere oughtnt shant shouldnt uhuh wasnt werent oughtn't shan't shouldn't
    uh-uh wasn't weren't without wont wouldnt won't wouldn't rarely seldom despite""".split()
)

_UP = """absolutely amazingly awfully completely considerable considerably decidedly
deeply effing enormous enormously entirely especially exceptional exceptionally extreme
extremely fabulously flipping flippin frackin fracking fricking frickin frigging friggin
fully fuckin fucking fuggin fugging greatly hella highly hugely incredible incredibly
intensely major majorly more most particularly purely quite really remarkably so
substantially thoroughly total totally tremendous tremendously uber unbelievably
unusually utter utterly very""".split()
_DOWN = """almost barely hardly kinda kindof kind-of less little marginal marginally
occasional occasionally partly scarce scarcely slight slightly somewhat sorta sortof
sort-of""".split()
BOOSTERS = {**{w: B_INCR for w in _UP}, **{w: B_DECR for w in _DOWN}}
PHRASE_BOOSTERS = {"kind of": B_DECR, "sort of": B_DECR, "just enough": B_DECR}


@dataclass(frozen=True)
class SentimentLexicon:
    valence: dict[str, float]
    boosters: dict[str, float] = field(default_factory=lambda: dict(BOOSTERS))
    negations: frozenset[str] = NEGATIONS

    def __post_init__(self) -> None:
        if not self.valence:
            raise EmptyLexicon("lexicon has no entries")
        if not all(math.isfinite(v) for v in self.boosters.values()):
            raise ValueError("booster increments must be finite")

    def __len__(self) -> int:
        return len(self.valence)

    def mirrored(self) -> "SentimentLexicon":
        """Copy with every valence sign flipped."""
        return SentimentLexicon({k: -v for k, v in self.valence.items()}, self.boosters, self.negations)


@dataclass(frozen=True)
class PolarityScores:
    neg: float
    neu: float
    pos: float
    compound: float

    def as_dict(self) -> dict[str, float]:
        return {"neg": self.neg, "neu": self.neu, "pos": self.pos, "compound": self.compound}


def parse_lexicon(text: str, source: str = "<string>", dup_level: int = logging.WARNING) -> SentimentLexicon:
    valence: dict[str, float] = {}
    bad = dup = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        try:
            token, mean = parts[0], float(parts[1])
        except (IndexError, ValueError):
            bad += 1
            continue
        if not token or not math.isfinite(mean):
            bad += 1
            continue
        if token in valence:
            dup += 1
        valence[token] = mean
    if bad:
        log.warning("%s: skipped %d malformed lexicon lines", source, bad)
    if dup:
        log.log(dup_level, "%s: %d duplicate lexicon tokens, last entry kept", source, dup)
    if not valence:
        raise EmptyLexicon(f"{source}: no lexicon entries")
    return SentimentLexicon(valence)


def load_lexicon(path: str | os.PathLike[str]) -> SentimentLexicon:
    """Read a tab-separated ``token, mean, stddev, ratings`` lexicon file."""
    p = Path(path)
    return parse_lexicon(p.read_text(encoding="utf-8"), str(p))


@lru_cache(maxsize=None)
def _bundled() -> SentimentLexicon:
    text = resources.files("evidencer.data").joinpath("vader_lexicon.txt").read_text(encoding="utf-8")
    # the upstream file has 14 known duplicates; not worth a warning each run
    return parse_lexicon(text, "vader_lexicon.txt", dup_level=logging.DEBUG)


def default_lexicon() -> SentimentLexicon:
    """Bundled lexicon, unless EVIDENCER_LEXICON names another file."""
    override = os.environ.get("EVIDENCER_LEXICON")
    if override:
        return load_lexicon(override)
    return _bundled()


def _strip_word(token: str) -> str:
    # keep short tokens such as ":)" intact, they are usually emoticons
    stripped = token.strip(string.punctuation)
    return token if len(stripped) <= 2 else stripped


def _words(text: str) -> list[str]:
    return [_strip_word(t) for t in text.split()]


def _is_negation(word: str, lex: SentimentLexicon) -> bool:
    return word in lex.negations or "n't" in word


def _booster(word: str, valence: float, caps_context: bool, lex: SentimentLexicon) -> float:
    lw = word.lower()
    if lw not in lex.boosters:
        return 0.0
    s = lex.boosters[lw]
    if valence < 0:
        s = -s
    if caps_context and word.isupper():
        s += C_INCR if valence > 0 else -C_INCR
    return s


def _negate(valence: float, lower: list[str], i: int, dist: int, lex: SentimentLexicon) -> float:
    """Apply the negation rule for the word ``dist`` places before position i."""
    w = lower[i - dist]
    if dist >= 2:
        between = lower[i - dist + 1 : i]
        if w == "never" and between and between[0] in ("so", "this"):
            return valence * 1.25
        if w == "without" and "doubt" in between:
            return valence
    if _is_negation(w, lex):
        return valence * N_SCALAR
    return valence


def word_valences(words: list[str], lex: SentimentLexicon) -> list[float]:
    """Rule-adjusted valence for every word (0 for words off the lexicon)."""
    lower = [w.lower() for w in words]
    n_caps = sum(1 for w in words if w.isupper())
    caps_context = 0 < n_caps < len(words)
    out: list[float] = []
    for i, w in enumerate(words):
        lw = lower[i]
        if lw in lex.boosters or (lw == "kind" and i + 1 < len(words) and lower[i + 1] == "of"):
            out.append(0.0)
            continue
        v = lex.valence.get(lw)
        if v is None:
            out.append(0.0)
            continue
        if caps_context and w.isupper():
            v += C_INCR if v > 0 else -C_INCR
        for dist, damp in ((1, 1.0), (2, 0.95), (3, 0.9)):
            if i < dist or lower[i - dist] in lex.valence:
                continue
            s = _booster(words[i - dist], v, caps_context, lex)
            v += s * damp
            v = _negate(v, lower, i, dist, lex)
        if i >= 3 and lower[i - 3] not in lex.valence:
            # phrase dampeners ending one or two words before this one
            for gram in (lower[i - 3 : i], lower[i - 3 : i - 1], lower[i - 2 : i]):
                inc = PHRASE_BOOSTERS.get(" ".join(gram))
                if inc is not None:
                    v += inc if v > 0 else -inc
        out.append(v)
    return out


def _apply_but(lower: list[str], vals: list[float]) -> list[float]:
    if "but" not in lower:
        return vals
    b = lower.index("but")
    return [v * BUT_BEFORE if j < b else v * BUT_AFTER if j > b else v for j, v in enumerate(vals)]


def _punct_boost(text: str) -> float:
    ep = min(text.count("!"), EP_MAX) * EP_WEIGHT
    qm = text.count("?")
    qa = 0.0
    if qm > 1:
        qa = qm * QM_WEIGHT if qm <= 3 else QM_CAP
    return ep + qa


def normalize(total: float, alpha: float = ALPHA) -> float:
    return total / math.sqrt(total * total + alpha)


def score(text: str, lex: SentimentLexicon | None = None, but_rule: bool = False) -> PolarityScores:
    """Polarity proportions and compound score for ``text``.

    ``but_rule`` halves valences before the first "but" and raises those
    after it by half.
    """
    lex = lex or default_lexicon()
    words = _words(text)
    if not words:
        return PolarityScores(0.0, 0.0, 0.0, 0.0)
    vals = word_valences(words, lex)
    if but_rule:
        vals = _apply_but([w.lower() for w in words], vals)

    amp = _punct_boost(text)
    total = sum(vals)
    if total > 0:
        total += amp
    elif total < 0:
        total -= amp
    compound = normalize(total)

    pos_sum = sum(v + 1 for v in vals if v > 0)
    neg_sum = sum(v - 1 for v in vals if v < 0)
    neu = sum(1 for v in vals if v == 0)
    if pos_sum > -neg_sum:
        pos_sum += amp
    elif pos_sum < -neg_sum:
        neg_sum -= amp
    denom = pos_sum - neg_sum + neu
    return PolarityScores(-neg_sum / denom, neu / denom, pos_sum / denom, compound)


_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+(?=[A-Z0-9\"'(\[])")


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENT_SPLIT.split(text.strip()) if s.strip()]


def compound_of(
    text: str,
    lex: SentimentLexicon | None = None,
    per_sentence: bool = False,
    but_rule: bool = False,
) -> float:
    """Compound score of the whole text, or the mean over its sentences."""
    if not per_sentence:
        return score(text, lex, but_rule).compound
    parts = split_sentences(text)
    if not parts:
        return 0.0
    return sum(score(p, lex, but_rule).compound for p in parts) / len(parts)
