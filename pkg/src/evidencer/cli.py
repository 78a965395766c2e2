"""Command-line entry point.

Every option can also come from an INI config file (``--config``) with one
section per subcommand, or a shared ``[evidencer]`` section.  Keys are the
long option names with dashes or underscores.  Command-line flags win.

Exit codes: 0 ok, 2 validation or input error, 3 transport error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

from . import __version__
from .corpus import (
    ExpertRecommendation,
    PartialDate,
    RecommendationTag,
    filter_corpus,
)
from .errors import EvidencerError, NotFound, TransportError, ValidationError
from .features import Source, VectorizerMode, analyses_for, build_matrix, export_triplets, fit_vocabulary
from .models.ensemble import Kind

log = logging.getLogger("evidencer")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TRANSPORT = 3


# config ---------------------------------------------------------------------


def _config_defaults(parser: argparse.ArgumentParser, path: str, section: str) -> dict:
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise ValidationError(f"cannot read config file {path}")
    values: dict[str, str] = {}
    for name in ("evidencer", section):
        if cp.has_section(name):
            values.update({k.replace("-", "_"): v for k, v in cp.items(name)})
    out = {}
    known = {a.dest: a for a in parser._actions}
    for a in parser._actions:
        for opt in a.option_strings:
            if opt.startswith("--"):
                known[opt[2:].replace("-", "_")] = a
    for key, raw in values.items():
        action = known.get(key)
        if action is None:
            raise ValidationError(f"config key {key!r} is not an option of {section!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            try:
                out[action.dest] = cp.BOOLEAN_STATES[raw.strip().lower()]
            except KeyError:
                raise ValidationError(f"config key {key!r}: not a boolean: {raw!r}") from None
            continue
        try:
            val = action.type(raw) if action.type else raw
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and val not in action.choices:
            raise ValidationError(f"config key {key!r}: {val!r} not in {sorted(action.choices)}")
        out[action.dest] = val
    return out


# shared helpers ---------------------------------------------------------------


def _records(path: str):
    from .acquire.store import load_corpus

    return load_corpus(path)


def _resources():
    from .lingua import default_tagger
    from .sentiment import default_lexicon

    return default_tagger(), default_lexicon()


def _labeled(records):
    unlabeled = [r.pmid for r in records if r.label is None]
    if unlabeled:
        raise ValidationError(f"{len(unlabeled)} record(s) have no label; run `annotate` first")
    return records


def _cv_config(args):
    from .pipeline.evaluation import CvConfig

    return CvConfig(
        k=args.k,
        seed=args.seed,
        min_df=args.min_df,
        window_months=args.window,
        n_trees=args.n_trees,
        learning_rate=args.learning_rate,
        merge_auc=args.merge_auc,
        pos_counts=args.pos_counts,
        per_sentence=args.per_sentence,
    )


def read_recommendations(path: str) -> dict[str, list[ExpertRecommendation]]:
    """TSV with columns pmid, expert_id, tags (comma separated) and an optional date."""
    out: dict[str, list[ExpertRecommendation]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if lineno == 1 and cols[0].strip().lower() == "pmid":
                continue
            if len(cols) < 3:
                raise ValidationError(f"{path}:{lineno}: expected pmid, expert_id, tags")
            try:
                tags = frozenset(RecommendationTag.parse(t) for t in cols[2].split(",") if t.strip())
                date = PartialDate.parse(cols[3]) if len(cols) > 3 and cols[3].strip() else None
                rec = ExpertRecommendation(cols[1].strip(), tags, date)
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            out.setdefault(cols[0].strip(), []).append(rec)
    return out


# subcommands --------------------------------------------------------------------


def cmd_ingest(args) -> int:
    from dataclasses import replace

    from .acquire import ColilClient, EutilsClient, FetchConfig, FixtureSession, HttpClient, check_pmid, save_corpus

    with open(args.pmids, encoding="utf-8") as fh:
        pmids = [check_pmid(p.split("#")[0]) for p in fh if p.split("#")[0].strip()]
    api_key = args.api_key or os.environ.get("EVIDENCER_EUTILS_KEY") or None
    kwargs = {"api_key": api_key, "retries": args.retries, "timeout": args.timeout}
    if args.rate_limit is not None:
        kwargs["rate_limit"] = args.rate_limit
    colil_url = args.colil_url or os.environ.get("EVIDENCER_COLIL_URL")
    if colil_url:
        kwargs["colil_endpoint_url"] = colil_url
    cfg = FetchConfig(**kwargs)
    session = FixtureSession(args.fixtures) if args.fixtures else None
    http = HttpClient(cfg, session=session)
    eutils = EutilsClient(cfg, http)
    year_cache: dict[str, PartialDate | None] = {}

    def lookup(pmid: str) -> PartialDate | None:
        if pmid not in year_cache:
            try:
                year_cache[pmid] = eutils.publication_date(pmid)
            except (NotFound, ValidationError):
                year_cache[pmid] = None
        return year_cache[pmid]

    colil = ColilClient(cfg, http, date_lookup=lookup)
    if args.query_template:
        colil.query_template = Path(args.query_template).read_text(encoding="utf-8")
    recs = read_recommendations(args.recommendations) if args.recommendations else {}

    out = []
    missing = 0
    for pmid in pmids:
        try:
            art = eutils.fetch_article(pmid)
        except NotFound:
            log.warning("PMID %s not found, skipped", pmid)
            missing += 1
            continue
        cits = colil.fetch_citances(pmid)
        out.append(replace(art, citances=tuple(cits), recommendations=tuple(recs.get(pmid, ()))))
    save_corpus(out, args.out)
    print(f"ingested {len(out)} of {len(pmids)} article(s); {missing} not found; "
          f"{colil.dropped} citing sentence(s) dropped for lack of a date")
    return EXIT_OK


def cmd_annotate(args) -> int:
    from .acquire import save_corpus

    records = _records(args.input)
    result = filter_corpus(records, args.window)
    save_corpus(result.kept, args.out)
    pos = sum(1 for r in result.kept if r.label.is_positive)
    print(f"kept {len(result.kept)} of {result.total}: {pos} Transformative, {len(result.kept) - pos} Incremental")
    for reason, n in sorted(result.removed.items()):
        print(f"  removed {reason}: {n}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    records = _labeled(_records(args.input))
    tagger, lexicon = _resources()
    source = Source(args.source)
    analyses = analyses_for(records, source, tagger, lexicon, args.window, args.pos_counts, args.per_sentence)
    vocab = fit_vocabulary([a.terms for a in analyses], min_df=args.min_df)
    X = build_matrix(analyses, vocab, VectorizerMode(args.mode))
    export_triplets(X, vocab, args.out)
    with open(f"{args.out}.rows", "w", encoding="utf-8", newline="\n") as fh:
        for i, r in enumerate(records):
            fh.write(f"{i}\t{r.pmid}\t{int(r.label.is_positive)}\n")
    print(f"{X.shape[0]} x {X.shape[1]} matrix, {int((X != 0).sum())} non-zeros -> {args.out}")
    return EXIT_OK


def _cells(args):
    from .pipeline.evaluation import GridCell, full_grid

    if args.grid == "full":
        return full_grid()
    return [GridCell(Source(args.source), VectorizerMode(args.mode), Kind.parse(args.classifier))]


def cmd_evaluate(args) -> int:
    from .pipeline.evaluation import cross_validate
    from .pipeline.reports import emit_roc

    records = _labeled(_records(args.input))
    tagger, lexicon = _resources()
    config = _cv_config(args)
    out_dir = Path(args.report)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = {}
    summary = ["cell\tauc_avg\tauc_min\tauc_max\tauc_merge\tfingerprint"]
    for cell in _cells(args):
        if cell.source not in cache:
            cache[cell.source] = analyses_for(
                records, cell.source, tagger, lexicon, config.window_months, config.pos_counts, config.per_sentence
            )
        t0 = time.perf_counter()
        rep = cross_validate(records, cell, config, tagger, lexicon, analyses=cache[cell.source])
        (out_dir / f"{cell.name}.json").write_text(rep.to_json() + "\n", encoding="utf-8", newline="\n")
        emit_roc(rep, out_dir / f"{cell.name}.roc")
        merge = "" if rep.auc_merge is None else f"{rep.auc_merge:.4f}"
        summary.append(f"{cell.name}\t{rep.auc_avg:.4f}\t{rep.auc_min:.4f}\t{rep.auc_max:.4f}\t{merge}\t{rep.fingerprint}")
        print(f"{cell.name}: AUC_avg {rep.auc_avg:.3f} ({rep.auc_min:.3f}-{rep.auc_max:.3f})"
              + (f" AUC_merge {rep.auc_merge:.3f}" if rep.auc_merge is not None else "")
              + f" [{time.perf_counter() - t0:.1f}s]")
    (out_dir / "summary.tsv").write_text("\n".join(summary) + "\n", encoding="utf-8", newline="\n")
    return EXIT_OK


def cmd_report(args) -> int:
    from .pipeline.evaluation import CvReport
    from .pipeline.reports import descriptive_stats, emit_roc, error_analysis, stats_tsv

    tables = {t.strip() for t in args.tables.split(",") if t.strip()} if args.tables else set()
    unknown = tables - {"mesh", "stats"}
    if unknown:
        raise ValidationError(f"unknown table(s): {', '.join(sorted(unknown))}")
    report_dir = Path(args.report)
    out_dir = Path(args.out) if args.out else report_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    records = _records(args.input) if args.input else None
    if tables and records is None:
        raise ValidationError("--tables needs --in CORPUS")

    if "stats" in tables:
        (out_dir / "descriptive_stats.tsv").write_text(
            stats_tsv(descriptive_stats(records, args.window)), encoding="utf-8", newline="\n"
        )
    report_paths = sorted(p for p in report_dir.glob("*.json"))
    if not report_paths and ("mesh" in tables or args.roc):
        raise ValidationError(f"no CvReport files in {report_dir}")
    for path in report_paths:
        rep = CvReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
        stem = path.stem
        if "mesh" in tables:
            ea = error_analysis(rep, records, window_months=args.window)
            (out_dir / f"{stem}.mesh.tsv").write_text(ea.to_tsv(args.top), encoding="utf-8", newline="\n")
            (out_dir / f"{stem}.errors.tsv").write_text(ea.examples_tsv(), encoding="utf-8", newline="\n")
        if args.roc:
            emit_roc(rep, out_dir / f"{stem}.roc")
        print(f"{stem}: AUC_avg {rep.auc_avg:.3f} ({rep.auc_min:.3f}-{rep.auc_max:.3f})")
        for name, mean, std in rep.importances[: args.top]:
            log.info("  %-40s %.4f +- %.4f", name, mean, std)
    return EXIT_OK


# parser ---------------------------------------------------------------------------


def _add_feature_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=24, help="citation window in months")
    p.add_argument("--min-df", type=int, default=2, help="minimum document frequency of an n-gram")
    p.add_argument("--pos-counts", action="store_true", help="raw POS counts instead of proportions")
    p.add_argument("--per-sentence", action="store_true", help="average the compound score over sentences")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evidencer", description="Classify clinical studies as transformative or incremental."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI file with defaults for any option")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch abstracts and citing sentences for a PMID list")
    p.add_argument("--pmids", required=True, help="file with one PMID per line")
    p.add_argument("--out", required=True, help="output corpus (JSON Lines)")
    p.add_argument("--recommendations", help="TSV of pmid, expert_id, tags, date")
    p.add_argument("--fixtures", help="serve responses from a fixture directory instead of the network")
    p.add_argument("--api-key", help="E-utilities key (default: $EVIDENCER_EUTILS_KEY)")
    p.add_argument("--colil-url", help="SPARQL endpoint (default: $EVIDENCER_COLIL_URL or Colil)")
    p.add_argument("--query-template", help="file with a SPARQL template containing {pmid}")
    p.add_argument("--rate-limit", type=float, help="requests per second (default 3, or 10 with a key)")
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("annotate", help="label articles and apply corpus filters")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=24)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("featurize", help="export the feature matrix as triplets")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source", choices=[s.value for s in Source], default="citances")
    p.add_argument("--mode", choices=[m.value for m in VectorizerMode], default="count")
    _add_feature_opts(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("evaluate", help="stratified cross-validation over one cell or the full grid")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--report", required=True, help="output directory")
    p.add_argument("--grid", choices=["full", "cell"], default="cell")
    p.add_argument("--source", choices=[s.value for s in Source], default="citances")
    p.add_argument("--mode", choices=[m.value for m in VectorizerMode], default="count")
    p.add_argument("--classifier", choices=["rf", "ada", "gbt"], default="rf")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-trees", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--merge-auc", action="store_true", help="also report AUC over pooled fold scores")
    _add_feature_opts(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="MeSH error tables, descriptive statistics and ROC plots")
    p.add_argument("--report", required=True, help="directory written by `evaluate`")
    p.add_argument("--in", dest="input", help="labeled corpus (needed for --tables)")
    p.add_argument("--out", help="output directory (default: the report directory)")
    p.add_argument("--tables", default="", help="comma list of mesh,stats")
    p.add_argument("--roc", action="store_true", help="write ROC CSV and SVG per report")
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--window", type=int, default=24)
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    names = [a for a in rest if not a.startswith("-")]
    sub = None
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            sub = action.choices
    command = next((n for n in names if n in sub), None)
    if command is None:
        return
    sp = sub[command]
    values = _config_defaults(sp, known.config, command)
    sp.set_defaults(**values)
    for action in sp._actions:
        if action.dest in values:
            action.required = False


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    except EvidencerError as exc:
        print(f"evidencer: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TransportError as exc:
        log.error("%s", exc)
        return EXIT_TRANSPORT
    except (EvidencerError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
