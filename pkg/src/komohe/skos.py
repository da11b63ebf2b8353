"""SKOS mapping exchange as line-oriented N-Triples.

Crosswalk relations map onto the four SKOS mapping predicates; null
mappings and combination targets have no SKOS counterpart and are skipped
(counted in the export report). Concept URIs are derived from the registry:
`urn:kos:<vocab-id>:<percent-encoded normalized term>`. Relevance ratings
carry no standard SKOS property and are dropped; imports come back
unrated. TSV stays the lossless format.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from io import StringIO
from typing import IO, Iterable
from urllib.parse import quote, unquote

from .errors import ConflictError, InvalidMappingError, InvalidTermError, NotFoundError
from .store import Concept, CrosswalkStore, Mapping, RelationType, RelevanceRating

logger = logging.getLogger(__name__)

SKOS_NS = "http://www.w3.org/2004/02/skos/core#"
URN_PREFIX = "urn:kos:"

RELATION_TO_PREDICATE = {
    RelationType.EQ: SKOS_NS + "exactMatch",
    RelationType.BROADER_TARGET: SKOS_NS + "broadMatch",
    RelationType.NARROWER_TARGET: SKOS_NS + "narrowMatch",
    RelationType.ASSOC: SKOS_NS + "relatedMatch",
}
PREDICATE_TO_RELATION = {v: k for k, v in RELATION_TO_PREDICATE.items()}

_TRIPLE_RE = re.compile(r"^<([^<>]*)>\s+<([^<>]*)>\s+<([^<>]*)>\s*\.$")


def concept_uri(vocab_id: str, term: str) -> str:
    """URN for a single-term concept; the term part is fully percent-encoded."""
    return f"{URN_PREFIX}{vocab_id}:{quote(term, safe='')}"


def parse_concept_uri(uri: str) -> tuple[str, str]:
    """Inverse of concept_uri; returns (vocab id, normalized term)."""
    if not uri.startswith(URN_PREFIX):
        raise InvalidTermError(f"not a {URN_PREFIX} URI: {uri!r}")
    rest = uri[len(URN_PREFIX) :]
    vocab_id, sep, encoded = rest.rpartition(":")
    if not sep or not vocab_id or not encoded:
        raise InvalidTermError(f"malformed concept URI {uri!r}")
    return vocab_id, unquote(encoded)


@dataclass
class SkosExport:
    text: str
    skipped_null: int = 0
    skipped_combination: int = 0

    @property
    def line_count(self) -> int:
        return sum(1 for line in self.text.splitlines() if line.strip())


@dataclass
class SkosImportReport:
    mappings_added: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)
    skipped_predicates: list[tuple[int, str]] = field(default_factory=list)


def export_skos(store: CrosswalkStore, crosswalk_ids: Iterable[str] | None = None) -> SkosExport:
    """Render crosswalks as N-Triples, one line per representable mapping.

    Lines are sorted by subject URI (then predicate and object) so output
    is reproducible. Null and combination-target mappings are counted in
    the report instead of emitted.
    """
    if crosswalk_ids is None:
        selected = store.crosswalks()
    else:
        selected = [store.crosswalk(cid) for cid in crosswalk_ids]
    export = SkosExport(text="")
    triples: list[tuple[str, str, str]] = []
    for crosswalk in selected:
        for mapping in crosswalk.mappings:
            if mapping.target is None:
                export.skipped_null += 1
                continue
            if not mapping.target.is_single:
                export.skipped_combination += 1
                continue
            triples.append(
                (
                    concept_uri(crosswalk.source_vocab, mapping.source.terms[0]),
                    RELATION_TO_PREDICATE[mapping.relation],
                    concept_uri(crosswalk.target_vocab, mapping.target.terms[0]),
                )
            )
    triples.sort()
    export.text = "".join(f"<{s}> <{p}> <{o}> .\n" for s, p, o in triples)
    return export


def import_skos(
    store: CrosswalkStore,
    stream: IO[str] | str,
    source_vocab: str,
    target_vocab: str,
) -> SkosImportReport:
    """Read N-Triples into one crosswalk; imported mappings are unrated.

    Malformed lines and URIs naming other vocabularies are reported per
    line; triples with predicates outside the four mapping predicates are
    skipped with a warning.
    """
    if isinstance(stream, str):
        stream = StringIO(stream)
    report = SkosImportReport()
    crosswalk = None
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        match = _TRIPLE_RE.match(line)
        if match is None:
            report.errors.append((line_no, f"malformed triple: {line!r}"))
            continue
        subject, predicate, obj = match.groups()
        relation = PREDICATE_TO_RELATION.get(predicate)
        if relation is None:
            logger.warning("line %d: skipping unsupported predicate %s", line_no, predicate)
            report.skipped_predicates.append((line_no, predicate))
            continue
        try:
            subject_vocab, source_term = parse_concept_uri(subject)
            object_vocab, target_term = parse_concept_uri(obj)
        except InvalidTermError as exc:
            report.errors.append((line_no, str(exc)))
            continue
        if subject_vocab != source_vocab or object_vocab != target_vocab:
            report.errors.append(
                (
                    line_no,
                    f"URI vocabularies {subject_vocab!r}->{object_vocab!r} do not "
                    f"match requested crosswalk {source_vocab!r}->{target_vocab!r}",
                )
            )
            continue
        try:
            if crosswalk is None:
                store.registry.ensure_vocabulary(source_vocab)
                store.registry.ensure_vocabulary(target_vocab)
                crosswalk, _ = store.ensure_crosswalk(source_vocab, target_vocab)
            store.registry.add_term(source_vocab, source_term)
            store.registry.add_term(target_vocab, target_term)
            mapping = Mapping(
                source=Concept.single(source_term),
                relation=relation,
                target=Concept.single(target_term),
                rating=RelevanceRating.UNRATED,
            )
            store.add_mapping(crosswalk.id, mapping)
        except (ConflictError, InvalidMappingError, InvalidTermError, NotFoundError) as exc:
            report.errors.append((line_no, str(exc)))
            continue
        report.mappings_added += 1
    return report
