"""The heterogeneity service: an HTTP+JSON lookup API over a loaded dataset.

The service is read-only: term lists and crosswalk TSVs are loaded once at
startup into an immutable snapshot and served to any number of concurrent
readers. Mutation happens through the CLI before serving; a reload is a
restart.

Endpoints (all GET, JSON responses carry a top-level "v": 1):
    /vocabularies
    /terms/{vocab}/{term}/mappings?relation=&target=&min_rating=
    /expand?q=&relations=&vocabs=&max=
    /translate?term=&from_lang=&to_lang=
"""

from __future__ import annotations

import json
import logging
import signal
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlsplit

from .errors import InvalidMappingError, InvalidTermError, KomoheError, NotFoundError, QueryParseError
from .queries import ExpansionConfig, expand_query, parse_query, render_query
from .registry import ISO_639_1, VocabularyRegistry
from .store import CrosswalkStore, RelationType, RelevanceRating

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    """A registry/store pair loaded from disk and served as one snapshot."""

    registry: VocabularyRegistry
    store: CrosswalkStore

    @classmethod
    def empty(cls) -> "Dataset":
        registry = VocabularyRegistry()
        return cls(registry=registry, store=CrosswalkStore(registry))

    @classmethod
    def load(cls, paths: list[Path]) -> "Dataset":
        """Load term-list (*.terms) and crosswalk (*.tsv) files.

        Directories are scanned (sorted); term lists load before crosswalks
        so vocabulary metadata wins over auto-registration.
        """
        dataset = cls.empty()
        term_files: list[Path] = []
        tsv_files: list[Path] = []
        for path in paths:
            if path.is_dir():
                term_files.extend(sorted(path.glob("*.terms")))
                tsv_files.extend(sorted(path.glob("*.tsv")))
            elif path.suffix == ".terms":
                term_files.append(path)
            else:
                tsv_files.append(path)
        for path in term_files:
            with path.open(encoding="utf-8") as fh:
                dataset.registry.import_terms(fh)
        for path in tsv_files:
            with path.open(encoding="utf-8") as fh:
                report = dataset.store.import_tsv(fh)
            for line_no, reason in report.errors:
                logger.warning("%s:%d: %s", path, line_no, reason)
        return dataset


@dataclass(frozen=True)
class TranslationCandidate:
    """A preferred controlled term in the requested language."""

    term: str
    vocab: str
    rating: RelevanceRating
    path: str  # crosswalk id the candidate came from


def translate(
    dataset: Dataset,
    term: str,
    target_lang: str,
    source_lang: str | None = None,
) -> list[TranslationCandidate]:
    """Follow equivalence mappings into vocabularies of the target language.

    The term is resolved in every vocabulary of the source language (or all
    vocabularies when unspecified); single-term equivalence targets in
    target-language vocabularies are returned, deduplicated per (vocab,
    term) keeping the best rating, ordered by rating then term.
    """
    if not dataset.registry.vocabularies_by_language(target_lang):
        raise NotFoundError(f"no vocabulary with language {target_lang!r}")
    if source_lang is None:
        source_vocabs = dataset.registry.vocabularies()
    else:
        source_vocabs = dataset.registry.vocabularies_by_language(source_lang)

    best: dict[tuple[str, str], TranslationCandidate] = {}
    for vocab in source_vocabs:
        found = dataset.registry.lookup_term(vocab.id, term)
        if found is None:
            continue
        for crosswalk, mapping in dataset.store.mappings_from(
            found.normalized,
            source_vocab=vocab.id,
            relations={RelationType.EQ},
        ):
            target_vocab = dataset.registry.vocabulary(crosswalk.target_vocab)
            if target_vocab.language != target_lang:
                continue
            if mapping.target is None or not mapping.target.is_single:
                continue
            candidate = TranslationCandidate(
                term=mapping.target.terms[0],
                vocab=crosswalk.target_vocab,
                rating=mapping.rating,
                path=crosswalk.id,
            )
            key = (candidate.vocab, candidate.term)
            current = best.get(key)
            if current is None or candidate.rating.rank > current.rating.rank:
                best[key] = candidate
    return sorted(best.values(), key=lambda c: (-c.rating.rank, c.term, c.vocab))


# ----------------------------------------------------------------------
# HTTP layer


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    data_paths: list[Path] = field(default_factory=list)
    read_timeout: float = 30.0
    max_expansion_terms: int = 32

    def __post_init__(self) -> None:
        # port 0 asks the OS for an ephemeral port
        if not 0 <= self.port <= 65535:
            raise InvalidMappingError(f"port {self.port} out of range")

    @classmethod
    def from_file(cls, path: Path) -> "ServiceConfig":
        """Flat key=value config; blank lines and `#` comments ignored."""
        values: dict[str, str] = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidMappingError(f"bad config line {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
        config = cls(
            host=values.get("host", "127.0.0.1"),
            port=int(values.get("port", "8080")),
            read_timeout=float(values.get("read_timeout", "30")),
            max_expansion_terms=int(values.get("max_expansion_terms", "32")),
        )
        if "data" in values:
            config.data_paths = [Path(p) for p in values["data"].split(",") if p]
        return config


class _BadRequest(Exception):
    pass


def _parse_relations(text: str) -> set[RelationType]:
    relations = set()
    for symbol in text.split(","):
        symbol = symbol.strip()
        if not symbol:
            continue
        try:
            relations.add(RelationType.parse(symbol))
        except InvalidMappingError as exc:
            raise _BadRequest(str(exc))
    if not relations:
        raise _BadRequest("no valid relation symbols given")
    if RelationType.NULL in relations:
        raise _BadRequest("relation 0 cannot be requested")
    return relations


def _parse_rating(text: str) -> RelevanceRating:
    try:
        rating = RelevanceRating.parse(text)
    except InvalidMappingError as exc:
        raise _BadRequest(str(exc))
    if rating is RelevanceRating.UNRATED:
        raise _BadRequest("min_rating must be high, medium, or low")
    return rating


def _rating_json(rating: RelevanceRating) -> str | None:
    return None if rating is RelevanceRating.UNRATED else rating.value


class KomoheRequestHandler(BaseHTTPRequestHandler):
    """Routes GET requests onto the module operations; never raises."""

    dataset: Dataset  # set on the subclass built by build_server
    max_expansion_terms: int = 32
    protocol_version = "HTTP/1.1"

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        try:
            split = urlsplit(self.path)
            segments = [unquote(s) for s in split.path.split("/") if s]
            params = parse_qs(split.query, keep_blank_values=True)
            payload, status = self.route(segments, params)
        except _BadRequest as exc:
            payload, status = {"v": 1, "error": str(exc)}, 400
        except NotFoundError as exc:
            payload, status = {"v": 1, "error": str(exc)}, 404
        except QueryParseError as exc:
            payload, status = (
                {"v": 1, "error": str(exc), "position": exc.position},
                400,
            )
        except (InvalidTermError, InvalidMappingError) as exc:
            payload, status = {"v": 1, "error": str(exc)}, 400
        except Exception:  # pragma: no cover - last-resort guard
            logger.exception("unhandled error for %s", self.path)
            payload, status = {"v": 1, "error": "internal error"}, 500
        body = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def route(self, segments: list[str], params: dict[str, list[str]]) -> tuple[dict, int]:
        if segments == ["vocabularies"]:
            return self.handle_vocabularies()
        if len(segments) == 4 and segments[0] == "terms" and segments[3] == "mappings":
            return self.handle_mappings(segments[1], segments[2], params)
        if segments == ["expand"]:
            return self.handle_expand(params)
        if segments == ["translate"]:
            return self.handle_translate(params)
        raise NotFoundError(f"no such route: /{'/'.join(segments)}")

    def handle_vocabularies(self) -> tuple[dict, int]:
        registry = self.dataset.registry
        vocabularies = [
            {
                "id": v.id,
                "name": v.name,
                "language": v.language,
                "discipline": v.discipline,
                "term_count": registry.term_count(v.id),
            }
            for v in registry.vocabularies()
        ]
        return {"v": 1, "vocabularies": vocabularies}, 200

    def handle_mappings(
        self, vocab_id: str, term: str, params: dict[str, list[str]]
    ) -> tuple[dict, int]:
        registry = self.dataset.registry
        registry.vocabulary(vocab_id)  # 404 for unknown vocabulary
        if registry.lookup_term(vocab_id, term) is None:
            raise NotFoundError(f"term {term!r} not found in {vocab_id!r}")
        relations = None
        if params.get("relation", [""])[0]:
            relations = _parse_relations(params["relation"][0])
        min_rating = None
        if params.get("min_rating", [""])[0]:
            min_rating = _parse_rating(params["min_rating"][0])
        target = params.get("target", [""])[0] or None
        results = self.dataset.store.mappings_from(
            term,
            source_vocab=vocab_id,
            relations=relations,
            min_rating=min_rating,
            target_vocabs={target} if target else None,
        )
        mappings = [
            {
                "relation": m.relation.value,
                "target_vocab": cw.target_vocab if m.target else None,
                "target_terms": list(m.target.terms) if m.target else [],
                "rating": _rating_json(m.rating),
            }
            for cw, m in results
        ]
        return {"v": 1, "mappings": mappings}, 200

    def handle_expand(self, params: dict[str, list[str]]) -> tuple[dict, int]:
        query = params.get("q", [""])[0]
        if not query.strip():
            raise _BadRequest("missing query parameter q")
        relations = frozenset({RelationType.EQ})
        if params.get("relations", [""])[0]:
            relations = frozenset(_parse_relations(params["relations"][0]))
        vocabs = None
        if params.get("vocabs", [""])[0]:
            vocabs = frozenset(
                v.strip() for v in params["vocabs"][0].split(",") if v.strip()
            )
        max_terms = self.max_expansion_terms
        if params.get("max", [""])[0]:
            try:
                max_terms = int(params["max"][0])
            except ValueError:
                raise _BadRequest(f"bad max value {params['max'][0]!r}")
        try:
            config = ExpansionConfig(
                relations=relations,
                target_vocabs=vocabs,
                max_terms_per_leaf=max_terms,
            )
        except (InvalidMappingError, ValueError) as exc:
            raise _BadRequest(str(exc))
        ast = parse_query(query)
        expanded, trace = expand_query(ast, self.dataset.store, config)
        return {
            "v": 1,
            "original": render_query(ast),
            "expanded": render_query(expanded),
            "trace": [
                {
                    "original": entry.original,
                    "additions": [
                        {
                            "term": a.term,
                            "source_vocab": a.source_vocab,
                            "target_vocab": a.target_vocab,
                            "relation": a.relation.value,
                            "rating": _rating_json(a.rating),
                        }
                        for a in entry.additions
                    ],
                }
                for entry in trace
            ],
        }, 200

    def handle_translate(self, params: dict[str, list[str]]) -> tuple[dict, int]:
        term = params.get("term", [""])[0]
        to_lang = params.get("to_lang", [""])[0]
        from_lang = params.get("from_lang", [""])[0] or None
        if not term.strip():
            raise _BadRequest("missing query parameter term")
        if not to_lang:
            raise _BadRequest("missing query parameter to_lang")
        if to_lang not in ISO_639_1 or (from_lang and from_lang not in ISO_639_1):
            raise _BadRequest("language codes must be two-letter ISO 639-1")
        candidates = translate(self.dataset, term, to_lang, from_lang)
        return {
            "v": 1,
            "candidates": [
                {"term": c.term, "vocab": c.vocab, "rating": _rating_json(c.rating)}
                for c in candidates
            ],
        }, 200

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        logger.debug("%s - %s", self.address_string(), format % args)


def build_server(dataset: Dataset, config: ServiceConfig) -> ThreadingHTTPServer:
    """Create a ready-to-run server bound to config.host:config.port."""
    handler = type(
        "BoundHandler",
        (KomoheRequestHandler,),
        {
            "dataset": dataset,
            "max_expansion_terms": config.max_expansion_terms,
            "timeout": config.read_timeout,
        },
    )
    server = ThreadingHTTPServer((config.host, config.port), handler)
    server.daemon_threads = True
    return server


def serve(config: ServiceConfig) -> int:
    """Load data, start the service, and block until SIGINT/SIGTERM."""
    if not config.data_paths:
        raise KomoheError("service needs at least one data path")
    dataset = Dataset.load(config.data_paths)
    totals = dataset.store.stats()
    logger.info(
        "loaded %d vocabularies, %d crosswalks, %d mappings",
        len(dataset.registry.vocabularies()),
        len(totals),
        sum(s.mapping_count for s in totals.values()),
    )
    server = build_server(dataset, config)
    stop = threading.Event()

    def request_shutdown(signum, frame):  # noqa: ARG001
        logger.info("signal %d received, shutting down", signum)
        stop.set()

    signal.signal(signal.SIGINT, request_shutdown)
    signal.signal(signal.SIGTERM, request_shutdown)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    logger.info("serving on %s:%d", *server.server_address[:2])
    try:
        while not stop.is_set():
            stop.wait(0.2)
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
    return 0
