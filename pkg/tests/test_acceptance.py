"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import contextlib
import json
import math
import random
import socket
import sys
import tempfile
import time
from collections import Counter
from pathlib import Path
from unittest import mock

import numpy as np
import pytest

HERE = Path(__file__).parent
if str(HERE) not in sys.path:
    sys.path.insert(0, str(HERE))

from conftest import FakeClock  # noqa: E402
from evidencer.acquire import (  # noqa: E402
    ColilClient,
    EutilsClient,
    FetchConfig,
    FixtureSession,
    HttpClient,
    RateLimiter,
)
from evidencer.acquire.store import save_corpus  # noqa: E402
from evidencer.cli import main as cli_main  # noqa: E402
from evidencer.corpus import ExpertRecommendation, Label, RecommendationTag, assign_label, filter_corpus  # noqa: E402
from evidencer.features import (  # noqa: E402
    Source,
    VectorizerMode,
    analyses_for,
    build_matrix,
    extract_ngrams,
    fit_vocabulary,
    ngram_words,
    transform_many,
)
from evidencer.lingua import default_tagger, holdout_split, load_fixture, pos_tag, tagging_accuracy, tokenize, train_tagger  # noqa: E402
from evidencer.models import balanced_weights, fit_ensemble  # noqa: E402
from evidencer.pipeline import CvConfig, GridCell, binary_labels, cross_validate, roc_auc  # noqa: E402
from evidencer.sentiment import default_lexicon, score  # noqa: E402
from evidencer.synthetic import SyntheticSpec, generate  # noqa: E402

SENT1 = ("This is supported by the recent AspECT clinical trial which found aspirin intake may have "
         "chemopreventative effects in Barrett’s patients.")
SENT2 = ("However, despite these data, evidence to suggest failure in secondary prevention of CRC by "
         "total colonoscopy and polypectomy is emerging.")


# 1 -------------------------------------------------------------------------


def pairwise_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins) / (len(pos) * len(neg))


def criterion_1():
    rng = np.random.default_rng(0)
    cases = []
    for i in range(1000):
        n = int(rng.integers(2, 501))
        levels = int(rng.choice([2, 3, 5, 20, 1000]))  # few levels means heavy ties
        s = rng.integers(0, levels, n) / levels
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        cases.append((s, y))
    t0 = time.perf_counter()
    got = [roc_auc(s, y) for s, y in cases]
    elapsed = time.perf_counter() - t0
    mismatches = sum(1 for (s, y), a in zip(cases, got) if a != pairwise_auc(s, y))
    ok = mismatches == 0 and elapsed < 5.0
    return ok, f"{mismatches} mismatches over 1000 sets, rank AUC took {elapsed:.2f}s"


# 2 -------------------------------------------------------------------------

HAND_CORPUS = [
    "Aspirin reduced the risk of cancer.",
    "Aspirin did not reduce the risk.",
    "Aspirin trial, aspirin dose.",
]


def criterion_2():
    counts = [extract_ngrams(ngram_words(tokenize(t))) for t in HAND_CORPUS]
    vocab = fit_vocabulary(counts, min_df=1)
    m = transform_many(counts, vocab, VectorizerMode.Tfidf)
    # independent count: plain whitespace split with punctuation stripped
    docs = [[w.strip(".,").lower() for w in t.split()] for t in HAND_CORPUS]
    grams = []
    for words in docs:
        g = Counter()
        for n in (1, 2, 3):
            for i in range(len(words) - n + 1):
                g[" ".join(words[i : i + n])] += 1
        grams.append(g)
    worst = 0.0
    for r, g in enumerate(grams):
        for j, term in enumerate(vocab.terms):
            df = sum(1 for h in grams if term in h)
            worst = max(worst, abs(m[r, j] - g[term] * math.log(3 / df)))
    all_docs = vocab.index["aspirin"]
    zero = bool((m[:, all_docs] == 0.0).all())
    same_terms = set(vocab.terms) == set().union(*grams)
    ok = worst <= 1e-9 and zero and same_terms
    return ok, f"max |error| {worst:.1e}; 'aspirin' column exactly 0: {zero}; vocab matches: {same_terms}"


# 3 -------------------------------------------------------------------------

EXAMPLE_NGRAMS = {
    (1, 1): "this is supported by the recent aspect clinical trial",
    (1, 2): "this is|is supported|supported by|by the|the recent|recent aspect|aspect clinical|clinical trial",
    (1, 3): "this is supported|is supported by|supported by the|by the recent|the recent aspect|"
            "recent aspect clinical|aspect clinical trial|clinical trial which",
    (2, 1): "however despite these data evidence to suggest failure in secondary",
    (2, 2): "however despite|despite these|these data|data evidence|evidence to|to suggest|suggest failure",
    (2, 3): "however despite these|despite these data|these data evidence|data evidence to",
}


def criterion_3():
    bad = []
    for (sent, n), printed in EXAMPLE_NGRAMS.items():
        expected = printed.split(" ") if n == 1 else printed.split("|")
        grams = extract_ngrams(ngram_words(tokenize(SENT1 if sent == 1 else SENT2)))
        got = [g for g in grams if g.count(" ") == n - 1][: len(expected)]
        if got != expected:
            bad.append(f"sentence {sent} n={n}")
    lex = default_lexicon()
    c1, c2 = score(SENT1, lex).compound, score(SENT2, lex).compound
    b1, b2 = score(SENT1, lex, but_rule=True).compound, score(SENT2, lex, but_rule=True).compound
    s_ok = abs(c1 - 0.3182) <= 0.02 and abs(c2 + 0.5106) <= 0.02
    b_ok = abs(b1 - 0.3182) <= 0.005 and abs(b2 + 0.5106) <= 0.005
    ok = not bad and s_ok and b_ok
    return ok, (f"n-gram mismatches: {bad or 'none'}; compound {c1:.4f} / {c2:.4f}, "
                f"with but-rule {b1:.4f} / {b2:.4f}")


# 4 -------------------------------------------------------------------------


def load_branch_fixture():
    rows = []
    for line in (HERE / "fixtures" / "labeling_branches.tsv").read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        ident, recs_text, expected = line.split("\t")
        recs = []
        for part in filter(None, recs_text.split("|")):
            expert, tags = part.split(":")
            recs.append(ExpertRecommendation(expert, frozenset(RecommendationTag.parse(t) for t in tags.split(","))))
        rows.append((ident, recs, Label.parse(expected)))
    return rows


def criterion_4():
    rows = load_branch_fixture()
    wrong = [ident for ident, recs, want in rows if assign_label(recs) != want]
    rnd = random.Random(0)
    unstable = set()
    for _ in range(100):
        for ident, recs, want in rows:
            shuffled = list(recs)
            rnd.shuffle(shuffled)
            if assign_label(shuffled) != want:
                unstable.add(ident)
    branches = Counter(want.format() for _, _, want in rows)
    ok = len(rows) == 50 and not wrong and not unstable and len(branches) == 5
    return ok, (f"{len(rows)} articles, {len(wrong)} wrong, {len(unstable)} order-dependent; "
                f"labels {dict(sorted(branches.items()))}")


# 5 -------------------------------------------------------------------------

PLANTED = {"however", "question", "questioned", "not", "no", "disputed", "challenged", "however the",
           "was questioned", "not confirmed", "did not", "the question", "benefit of"}


def criterion_5():
    t0 = time.perf_counter()
    records = filter_corpus(generate(SyntheticSpec(n_docs=600, positive_fraction=0.55, seed=0))).kept
    y = binary_labels(records)
    tagger, lexicon = default_tagger(), default_lexicon()
    config = CvConfig(k=10, seed=0, n_trees=200)
    cit = analyses_for(records, Source.citances, tagger, lexicon)
    rep_c = cross_validate(records, GridCell(Source.citances), config, analyses=cit)
    shuffled = np.random.default_rng(0).permutation(y)
    rep_s = cross_validate(records, GridCell(Source.citances), config, analyses=cit, labels=shuffled)
    rep_a = cross_validate(records, GridCell(Source.abstract), config, tagger, lexicon)
    elapsed = time.perf_counter() - t0
    top = [name for name, _, _ in rep_c.importances[:20]]
    cue_hits = [n for n in top if n in PLANTED]
    pos_hits = [n for n in top if n.startswith("__POS_")]
    ok = (
        len(records) == 600
        and int(y.sum()) == 330
        and rep_c.auc_avg >= 0.90
        and 0.40 <= rep_s.auc_avg <= 0.60
        and rep_c.auc_avg > rep_a.auc_avg
        and cue_hits
        and pos_hits
        and elapsed < 60.0
    )
    return ok, (f"AUC citances {rep_c.auc_avg:.3f}, shuffled {rep_s.auc_avg:.3f}, abstract {rep_a.auc_avg:.3f}; "
                f"top-20 cues {cue_hits}, POS {pos_hits}; {elapsed:.1f}s")


# 6 -------------------------------------------------------------------------


def criterion_6():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        save_corpus(filter_corpus(generate(SyntheticSpec(n_docs=120, seed=1))).kept, tmp / "c.jsonl")
        outs = []
        for run in ("a", "b"):
            args = ["evaluate", "--in", str(tmp / "c.jsonl"), "--report", str(tmp / run),
                    "--k", "5", "--n-trees", "25", "--seed", "7", "--merge-auc"]
            if cli_main(args) != 0:
                return False, f"evaluate run {run} failed"
            outs.append(tmp / run)
        a, b = outs
        name = "citances-count-RandomForest"
        fa = json.loads((a / f"{name}.json").read_text())["fingerprint"]
        fb = json.loads((b / f"{name}.json").read_text())["fingerprint"]
        same = {
            suffix: (a / f"{name}{suffix}").read_bytes() == (b / f"{name}{suffix}").read_bytes()
            for suffix in (".roc.csv", ".roc.svg")
        }
        same["summary.tsv"] = (a / "summary.tsv").read_bytes() == (b / "summary.tsv").read_bytes()
    ok = fa == fb and all(same.values())
    return ok, f"fingerprints equal: {fa == fb} ({fa[:12]}); byte-identical: {same}"


# 7 -------------------------------------------------------------------------


def minority_recall(seed: int) -> tuple[float, float]:
    """Held-out minority recall of weighted and unweighted RF on a 9:1 planted corpus."""
    records = filter_corpus(generate(SyntheticSpec(n_docs=600, positive_fraction=0.1, seed=seed))).kept
    y = binary_labels(records)
    analyses = analyses_for(records, Source.citances, default_tagger(), default_lexicon())
    train = np.arange(len(records)) % 2 == 0
    vocab = fit_vocabulary([a.terms for a, t in zip(analyses, train) if t], 2)
    Xtr = build_matrix([a for a, t in zip(analyses, train) if t], vocab, VectorizerMode.Count)
    Xte = build_matrix([a for a, t in zip(analyses, train) if not t], vocab, VectorizerMode.Count)
    yte = y[~train]
    out = []
    for cw in ("balanced", None):
        model = fit_ensemble("rf", Xtr, y[train], n_trees=200, seed=0, class_weights=cw)
        pred = model.predict_proba(Xte) >= 0.5
        out.append(float(pred[yte == 1].mean()))
    return out[0], out[1]


def criterion_7():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        n_pos, n_neg = int(rng.integers(1, 5000)), int(rng.integers(1, 5000))
        y = np.array([1] * n_pos + [0] * n_neg)
        w = balanced_weights(y).for_labels(y)
        worst = max(worst, abs(w[y == 1].sum() - w[y == 0].sum()) / len(y))
    mass_ok = worst <= 1e-12
    weighted, unweighted = minority_recall(0)
    sweep = [minority_recall(s) for s in (1, 2, 3)]
    ok = mass_ok and weighted >= unweighted
    return ok, (f"mass gap {worst:.1e}; seed 0 minority recall weighted {weighted:.3f} vs unweighted "
                f"{unweighted:.3f}; seeds 1-3 (informational): "
                + ", ".join(f"{a:.3f}/{b:.3f}" for a, b in sweep))


# 8 -------------------------------------------------------------------------


def criterion_8():
    train, test = holdout_split(load_fixture())
    acc = tagging_accuracy(train_tagger(train), test)
    tagger = default_tagger()
    t1 = [t.tag for t in pos_tag(tokenize(SENT1), tagger)][:6]
    t2 = [t.tag for t in pos_tag(tokenize(SENT2), tagger)][:5]
    prefixes = t1 == ["DT", "VBZ", "VBN", "IN", "DT", "JJ"] and t2 == ["RB", ",", "IN", "DT", "NNS"]
    ok = acc >= 0.90 and prefixes
    return ok, f"held-out accuracy {acc:.3f}; prefixes {' '.join(t1)} / {' '.join(t2)}"


# 9 -------------------------------------------------------------------------


class NetworkBlocked(RuntimeError):
    pass


@contextlib.contextmanager
def network_blocked():
    def guard(*args, **kwargs):
        raise NetworkBlocked("network access attempted")

    with mock.patch.object(socket.socket, "connect", guard), \
            mock.patch.object(socket.socket, "connect_ex", guard), \
            mock.patch.object(socket, "create_connection", guard), \
            mock.patch.object(socket, "getaddrinfo", guard):
        yield


def budget_violations(times: list[float], rate: float) -> int:
    cap = max(1, int(rate))
    bad = 0
    for i, t in enumerate(times):
        if sum(1 for u in times[i:] if u < t + 1.0) > cap:
            bad += 1
    bad += sum(1 for a, b in zip(times, times[1:]) if b - a < 1.0 / rate - 1e-9)
    return bad


def criterion_9():
    clock = FakeClock()
    cfg = FetchConfig(rate_limit=3)
    with network_blocked():
        session = FixtureSession(HERE / "fixtures" / "acquire")
        http = HttpClient(cfg, session=session, sleep=clock.sleep, clock=clock)
        eutils = EutilsClient(cfg, http)
        colil = ColilClient(cfg, http, date_lookup=eutils.publication_date)
        art = eutils.fetch_article("11111111")
        cits = colil.fetch_citances("11111111")
        fallback = colil.fetch_citances("22222222")
    fixtures_ok = (
        art.journal == "N Engl J Med" and len(cits) == 2 and len(fallback) == 2 and colil.dropped == 1
    )
    rnd = random.Random(0)
    violations = 0
    granted_total = 0
    for rate in (0.5, 1.0, 3.0, 7.5, 10.0):
        fc = FakeClock()
        lim = RateLimiter(rate, clock=fc, sleep=fc.sleep)
        times = []
        for _ in range(200):
            fc.advance(rnd.choice([0.0, 0.0, 0.01, 0.1, 0.5, 1.5]))
            times.append(lim.acquire())
        violations += budget_violations(times, rate)
        granted_total += len(times)
    ok = fixtures_ok and violations == 0
    return ok, (f"{len(session.calls)} fixture requests, no network; fixtures as expected: {fixtures_ok}; "
                f"limiter violations {violations} over {granted_total} acquisitions")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number - 1]()
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for i, fn in enumerate(CRITERIA, start=1):
        ok, detail = fn()
        failed += not ok
        print(f"criterion {i}: {'PASS' if ok else 'FAIL'} {detail}", flush=True)
    sys.exit(1 if failed else 0)
