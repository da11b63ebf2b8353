"""Operator command line: import/export, lookups, expansion, inference, serving.

Machine-readable results go to stdout, diagnostics to stderr. Exit codes:
0 success, 1 domain error, 2 usage error.

The working data lives in a directory (flag --data, else $KOMOHE_DATA,
else ./komohe-data) holding one `<vocab>.terms` file per vocabulary and a
canonical `crosswalks.tsv`. Mutating commands rewrite both.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from urllib.parse import quote

from .assessment import load_corpus, sample_assessment
from .errors import KomoheError
from .inference import detect_variant_mappings, export_inferred_tsv, infer_pivot
from .queries import ExpansionConfig, expand_query, parse_query, render_query
from .registry import Vocabulary
from .service import Dataset, ServiceConfig, serve
from .skos import export_skos, import_skos
from .store import Mapping, RelationType, RelevanceRating

logger = logging.getLogger(__name__)

DATA_ENV = "KOMOHE_DATA"
CROSSWALKS_FILE = "crosswalks.tsv"


def data_dir(args: argparse.Namespace) -> Path:
    if args.data:
        return Path(args.data)
    return Path(os.environ.get(DATA_ENV, "komohe-data"))


def load_dataset(args: argparse.Namespace) -> Dataset:
    directory = data_dir(args)
    if not directory.exists():
        return Dataset.empty()
    return Dataset.load([directory])


def save_dataset(dataset: Dataset, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for vocab in dataset.registry.vocabularies():
        filename = quote(vocab.id, safe="") + ".terms"
        (directory / filename).write_text(
            dataset.registry.export_terms(vocab.id), encoding="utf-8"
        )
    (directory / CROSSWALKS_FILE).write_text(
        dataset.store.export_tsv(), encoding="utf-8"
    )


def _parse_relation_set(text: str) -> set[RelationType]:
    relations = set()
    for symbol in text.split(","):
        symbol = symbol.strip()
        if symbol:
            relations.add(RelationType.parse(symbol))
    if not relations:
        raise KomoheError(f"no relation symbols in {text!r}")
    return relations


def _print_mapping_rows(results) -> None:
    for crosswalk, mapping in results:
        target_terms = mapping.target.label if mapping.target else ""
        target_vocab = crosswalk.target_vocab if mapping.target else ""
        print(
            "\t".join(
                (
                    crosswalk.source_vocab,
                    mapping.source.terms[0],
                    mapping.relation.value,
                    target_vocab,
                    target_terms,
                    mapping.rating.value,
                )
            )
        )


# ----------------------------------------------------------------------
# subcommands


def cmd_import(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    with open(args.file, encoding="utf-8") as fh:
        report = dataset.store.import_tsv(fh)
    save_dataset(dataset, data_dir(args))
    print(f"crosswalks_created\t{report.crosswalks_created}")
    print(f"mappings_added\t{report.mappings_added}")
    print(f"errors\t{len(report.errors)}")
    for line_no, reason in report.errors:
        print(f"{args.file}:{line_no}: {reason}", file=sys.stderr)
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    ids = args.crosswalk or None
    sys.stdout.write(dataset.store.export_tsv(ids))
    return 0


def cmd_terms(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    if not dataset.registry.has_vocabulary(args.vocab):
        dataset.registry.register_vocabulary(
            Vocabulary(
                id=args.vocab,
                name=args.name or "",
                language=args.lang,
                discipline=args.discipline or "",
            )
        )
    with open(args.file, encoding="utf-8") as fh:
        added = dataset.registry.import_terms(fh, vocab_id=args.vocab)
    save_dataset(dataset, data_dir(args))
    print(f"terms_added\t{added}")
    print(
        f"vocabulary {args.vocab!r} now holds "
        f"{dataset.registry.term_count(args.vocab)} terms",
        file=sys.stderr,
    )
    return 0


def cmd_lookup(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    relations = _parse_relation_set(args.relation) if args.relation else None
    min_rating = RelevanceRating.parse(args.min_rating) if args.min_rating else None
    results = dataset.store.mappings_from(
        args.term,
        source_vocab=args.vocab,
        relations=relations,
        min_rating=min_rating,
    )
    _print_mapping_rows(results)
    return 0


def cmd_reverse(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    results = dataset.store.mappings_to(args.term, target_vocab=args.vocab)
    _print_mapping_rows(results)
    return 0


def cmd_expand(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    config = ExpansionConfig(
        relations=frozenset(_parse_relation_set(args.relations)),
        target_vocabs=frozenset(args.vocabs.split(",")) if args.vocabs else None,
        max_terms_per_leaf=args.max,
    )
    ast = parse_query(args.query)
    expanded, trace = expand_query(ast, dataset.store, config)
    print(render_query(expanded))
    for entry in trace:
        for added in entry.additions:
            print(
                f"+ {entry.original!r} <- {added.term!r} "
                f"({added.source_vocab}->{added.target_vocab}, "
                f"{added.relation.value}, {added.rating.value or 'unrated'})",
                file=sys.stderr,
            )
    return 0


def cmd_translate(args: argparse.Namespace) -> int:
    from .service import translate

    dataset = load_dataset(args)
    candidates = translate(dataset, args.term, args.to, source_lang=getattr(args, "from"))
    for c in candidates:
        print("\t".join((c.term, c.vocab, c.rating.value, c.path)))
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    inferred = infer_pivot(dataset.store, args.source, args.target, args.via)
    sys.stdout.write(export_inferred_tsv(inferred, args.source, args.target))
    if args.promote:
        crosswalk, _ = dataset.store.ensure_crosswalk(args.source, args.target)
        promoted = 0
        for m in inferred:
            mapping = Mapping(
                source=m.source,
                relation=m.relation,
                target=m.target,
                rating=m.confidence,
            )
            if crosswalk.contains(mapping):
                continue
            dataset.store.add_mapping(crosswalk.id, mapping)
            promoted += 1
        save_dataset(dataset, data_dir(args))
        print(f"promoted {promoted} mappings into {crosswalk.id}", file=sys.stderr)
    return 0


def cmd_variants(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    for conflict in detect_variant_mappings(dataset.store, args.target):
        print(
            "\t".join(
                (
                    conflict.term,
                    conflict.vocab_pair[0],
                    conflict.vocab_pair[1],
                    conflict.target_vocab,
                    conflict.targets[0].label,
                    conflict.targets[1].label,
                )
            )
        )
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    with open(args.corpus, encoding="utf-8") as fh:
        load = load_corpus(fh)
    for line_no, reason in load.errors:
        print(f"{args.corpus}:{line_no}: {reason}", file=sys.stderr)
    report = sample_assessment(
        dataset.store, args.crosswalk, load.corpus, args.sample, args.seed
    )
    sys.stdout.write(report.to_tsv())
    print(
        f"sampled {report.sample_size} mappings, "
        f"empty-target rate {report.empty_target_rate:.2f}",
        file=sys.stderr,
    )
    return 0


def cmd_skos_export(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    export = export_skos(dataset.store, args.crosswalk or None)
    sys.stdout.write(export.text)
    print(
        f"skipped {export.skipped_null} null and "
        f"{export.skipped_combination} combination mappings",
        file=sys.stderr,
    )
    return 0


def cmd_skos_import(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    with open(args.file, encoding="utf-8") as fh:
        report = import_skos(dataset.store, fh, args.source, args.target)
    save_dataset(dataset, data_dir(args))
    print(f"mappings_added\t{report.mappings_added}")
    for line_no, reason in report.errors:
        print(f"{args.file}:{line_no}: {reason}", file=sys.stderr)
    for line_no, predicate in report.skipped_predicates:
        print(f"{args.file}:{line_no}: skipped predicate {predicate}", file=sys.stderr)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    print(
        "#crosswalk\tmappings\t=\t<\t>\t^\t0\thigh\tmedium\tlow\tunrated"
    )
    for crosswalk_id, stats in dataset.store.stats().items():
        print(
            "\t".join(
                [
                    crosswalk_id,
                    str(stats.mapping_count),
                    *(str(stats.relations[r]) for r in RelationType),
                    *(
                        str(stats.ratings[r])
                        for r in (
                            RelevanceRating.HIGH,
                            RelevanceRating.MEDIUM,
                            RelevanceRating.LOW,
                            RelevanceRating.UNRATED,
                        )
                    ),
                ]
            )
        )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    if args.config:
        config = ServiceConfig.from_file(Path(args.config))
    else:
        config = ServiceConfig()
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    if args.data:
        config.data_paths = [Path(args.data)]
    if not config.data_paths:
        config.data_paths = [data_dir(args)]
    return serve(config)


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="komohe",
        description="Terminology mapping engine: crosswalks, query expansion, "
        "pivot inference, SKOS/TSV exchange, HTTP lookup service.",
    )
    parser.add_argument(
        "--data",
        help=f"data directory (default: ${DATA_ENV} or ./komohe-data)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="merge a crosswalk TSV file into the store")
    p.add_argument("file")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("export", help="write crosswalks as TSV to stdout")
    p.add_argument("--crosswalk", action="append", help="crosswalk id, e.g. A-B (repeatable)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("terms", help="load a term-list file into a vocabulary")
    p.add_argument("vocab")
    p.add_argument("file")
    p.add_argument("--lang", default="en", help="ISO 639-1 code for a new vocabulary")
    p.add_argument("--name")
    p.add_argument("--discipline")
    p.set_defaults(func=cmd_terms)

    p = sub.add_parser("lookup", help="mappings whose source is the given term")
    p.add_argument("term")
    p.add_argument("--vocab", help="restrict to one source vocabulary")
    p.add_argument("--relation", help="comma-separated relation symbols, e.g. =,^")
    p.add_argument("--min-rating", dest="min_rating", choices=["high", "medium", "low"])
    p.set_defaults(func=cmd_lookup)

    p = sub.add_parser("reverse", help="mappings whose target contains the given term")
    p.add_argument("term")
    p.add_argument("--vocab", help="restrict to one target vocabulary")
    p.set_defaults(func=cmd_reverse)

    p = sub.add_parser("expand", help="expand a Boolean query with mapped terms")
    p.add_argument("query")
    p.add_argument("--relations", default="=", help="comma-separated relation symbols")
    p.add_argument("--vocabs", help="comma-separated target vocabulary ids")
    p.add_argument("--max", type=int, default=32, help="max added terms per leaf")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("translate", help="equivalent terms in another language")
    p.add_argument("term")
    p.add_argument("--to", required=True, help="target language (ISO 639-1)")
    p.add_argument("--from", dest="from", default=None, help="source language filter")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("infer", help="propose indirect mappings via a pivot vocabulary")
    p.add_argument("--from", dest="source", required=True, help="source vocabulary")
    p.add_argument("--to", dest="target", required=True, help="target vocabulary")
    p.add_argument("--via", required=True, help="pivot vocabulary")
    p.add_argument(
        "--promote",
        action="store_true",
        help="write the inferred mappings into the store",
    )
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("variants", help="report conflicting equivalence targets")
    p.add_argument("--target", required=True, help="target vocabulary to audit")
    p.set_defaults(func=cmd_variants)

    p = sub.add_parser("check", help="assess sampled mappings against a corpus")
    p.add_argument("--crosswalk", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--sample", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("skos-export", help="write mappings as SKOS N-Triples")
    p.add_argument("--crosswalk", action="append")
    p.set_defaults(func=cmd_skos_export)

    p = sub.add_parser("skos-import", help="read SKOS N-Triples into one crosswalk")
    p.add_argument("file")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_skos_import)

    p = sub.add_parser("stats", help="per-crosswalk mapping tallies")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the HTTP lookup service")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse argv and dispatch; returns the process exit code."""
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (KomoheError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
