"""Directed crosswalk store: mappings, indexes, statistics, TSV persistence.

A crosswalk holds directed mappings from one vocabulary into another.
Crosswalks are independent per direction: A->B and B->A coexist and need
not agree. The store keeps forward (by source term) and reverse (by target
member term) indexes and persists bit-exactly to a line-oriented TSV
format.

TSV format (UTF-8, LF):
    line 1:     #komohe-tsv v1
    data lines: source_vocab<TAB>source_term<TAB>relation<TAB>target_vocab<TAB>target_terms<TAB>rating

Relation symbols: = (equivalence), < (target is broader), > (target is
narrower), ^ (association), 0 (no counterpart exists). Combination targets
join their member terms with " + ", so terms containing that exact
three-character sequence do not survive the interchange format.
target_terms and rating are empty for relation 0; lines starting with `#`
are ignored. On export, null rows keep the target vocabulary in column 4
so every line is attributable to its crosswalk; on import an empty column
4 on a null row falls back to the last crosswalk seen for that source
vocabulary.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from io import StringIO
from typing import IO, Iterable

from .errors import (
    ConflictError,
    FormatError,
    InvalidMappingError,
    InvalidTermError,
    NotFoundError,
)
from .registry import VocabularyRegistry, normalize_term

TSV_HEADER = "#komohe-tsv v1"
COMBINATION_JOIN = " + "


class RelationType(Enum):
    """The five crosswalk relation symbols."""

    EQ = "="
    BROADER_TARGET = "<"
    NARROWER_TARGET = ">"
    ASSOC = "^"
    NULL = "0"

    @classmethod
    def parse(cls, symbol: str) -> "RelationType":
        try:
            return cls(symbol)
        except ValueError:
            raise InvalidMappingError(f"unknown relation symbol {symbol!r}") from None


class RelevanceRating(Enum):
    """Per-mapping quality tag; HIGH > MEDIUM > LOW, UNRATED sits outside the order."""

    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"
    UNRATED = ""

    @property
    def rank(self) -> int:
        return _RATING_RANK[self]

    def meets(self, minimum: "RelevanceRating | None") -> bool:
        """Threshold check; UNRATED fails every explicit threshold."""
        if minimum is None:
            return True
        return self is not RelevanceRating.UNRATED and self.rank >= minimum.rank

    @classmethod
    def parse(cls, text: str) -> "RelevanceRating":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InvalidMappingError(f"unknown rating {text!r}") from None


_RATING_RANK = {
    RelevanceRating.HIGH: 3,
    RelevanceRating.MEDIUM: 2,
    RelevanceRating.LOW: 1,
    RelevanceRating.UNRATED: 0,
}


@dataclass(frozen=True)
class Concept:
    """A single controlled term or an ordered combination of two or more.

    Member terms are stored normalized. A combination is a distinct concept
    from each of its members.
    """

    terms: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise InvalidTermError("concept needs at least one term")

    @classmethod
    def single(cls, term: str) -> "Concept":
        return cls((normalize_term(term),))

    @classmethod
    def combination(cls, terms: Iterable[str]) -> "Concept":
        """A 1:n target concept; a one-element combination is a plain single."""
        normalized = tuple(normalize_term(t) for t in terms)
        if not normalized:
            raise InvalidTermError("combination needs at least one term")
        return cls(normalized)

    @property
    def is_single(self) -> bool:
        return len(self.terms) == 1

    @property
    def label(self) -> str:
        return COMBINATION_JOIN.join(self.terms)


@dataclass(frozen=True)
class Mapping:
    """One directed relation inside a crosswalk.

    The source is always a single term; the target is absent exactly for
    NULL relations and may be a combination for any other relation.
    """

    source: Concept
    relation: RelationType
    target: Concept | None = None
    rating: RelevanceRating = RelevanceRating.UNRATED
    mapping_id: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.source.is_single:
            raise InvalidMappingError("mapping source must be a single term")
        if self.relation is RelationType.NULL and self.target is not None:
            raise InvalidMappingError("null relation cannot carry a target")
        if self.relation is not RelationType.NULL and self.target is None:
            raise InvalidMappingError(
                f"relation {self.relation.value!r} requires a target"
            )

    @property
    def triple(self) -> tuple[tuple[str, ...], str, tuple[str, ...] | None]:
        """Identity key for duplicate detection: (source, relation, target)."""
        return (
            self.source.terms,
            self.relation.value,
            self.target.terms if self.target else None,
        )

    @property
    def label(self) -> str:
        if self.target is None:
            return f"{self.source.label} {self.relation.value}"
        return f"{self.source.label} {self.relation.value} {self.target.label}"


@dataclass
class Crosswalk:
    """A directed cross-concordance between two vocabularies."""

    source_vocab: str
    target_vocab: str
    mappings: list[Mapping] = field(default_factory=list)
    _triples: set = field(default_factory=set, repr=False)

    @property
    def id(self) -> str:
        return f"{self.source_vocab}-{self.target_vocab}"

    def contains(self, mapping: Mapping) -> bool:
        """True when an identical (source, relation, target) triple is stored."""
        return mapping.triple in self._triples


@dataclass
class CrosswalkStats:
    mapping_count: int
    relations: dict[RelationType, int]
    ratings: dict[RelevanceRating, int]


@dataclass
class ImportReport:
    crosswalks_created: int = 0
    mappings_added: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)


class CrosswalkStore:
    """In-memory indexed store of crosswalks over a shared registry.

    Readers see a stable snapshot; all writes are serialized behind a lock.
    """

    def __init__(self, registry: VocabularyRegistry):
        self.registry = registry
        self._crosswalks: dict[str, Crosswalk] = {}
        # term -> crosswalk id -> mappings, insertion order preserved
        self._by_source: dict[str, dict[str, list[Mapping]]] = {}
        self._by_target: dict[str, dict[str, list[Mapping]]] = {}
        self._lock = threading.Lock()

    # ------------------------------------------------------------------
    # crosswalk management

    def create_crosswalk(self, source_vocab: str, target_vocab: str) -> Crosswalk:
        if source_vocab == target_vocab:
            raise InvalidMappingError(
                f"crosswalk source and target must differ (got {source_vocab!r})"
            )
        self.registry.vocabulary(source_vocab)
        self.registry.vocabulary(target_vocab)
        crosswalk = Crosswalk(source_vocab, target_vocab)
        with self._lock:
            existing = self._crosswalks.get(crosswalk.id)
            if existing is not None:
                if (existing.source_vocab, existing.target_vocab) != (
                    source_vocab,
                    target_vocab,
                ):
                    raise ConflictError(
                        f"crosswalk id {crosswalk.id!r} collides with "
                        f"{existing.source_vocab!r}->{existing.target_vocab!r}"
                    )
                raise ConflictError(f"crosswalk {crosswalk.id!r} already exists")
            self._crosswalks[crosswalk.id] = crosswalk
        return crosswalk

    def ensure_crosswalk(self, source_vocab: str, target_vocab: str) -> tuple[Crosswalk, bool]:
        """Get or create; returns (crosswalk, created)."""
        candidate_id = f"{source_vocab}-{target_vocab}"
        existing = self._crosswalks.get(candidate_id)
        if existing is not None and (existing.source_vocab, existing.target_vocab) == (
            source_vocab,
            target_vocab,
        ):
            return existing, False
        return self.create_crosswalk(source_vocab, target_vocab), True

    def crosswalk(self, crosswalk_id: str) -> Crosswalk:
        try:
            return self._crosswalks[crosswalk_id]
        except KeyError:
            raise NotFoundError(f"unknown crosswalk {crosswalk_id!r}") from None

    def has_crosswalk(self, crosswalk_id: str) -> bool:
        return crosswalk_id in self._crosswalks

    def crosswalks(self) -> list[Crosswalk]:
        return [self._crosswalks[k] for k in sorted(self._crosswalks)]

    def find_crosswalk(self, source_vocab: str, target_vocab: str) -> Crosswalk | None:
        cw = self._crosswalks.get(f"{source_vocab}-{target_vocab}")
        if cw and (cw.source_vocab, cw.target_vocab) == (source_vocab, target_vocab):
            return cw
        return None

    # ------------------------------------------------------------------
    # mappings

    def add_mapping(self, crosswalk_id: str, mapping: Mapping) -> str:
        """Store a mapping; returns the assigned mapping id.

        The source term must be registered in the source vocabulary and all
        target members in the target vocabulary. Duplicate (source,
        relation, target) triples within one crosswalk are conflicts.
        """
        crosswalk = self.crosswalk(crosswalk_id)
        source_term = mapping.source.terms[0]
        if not self.registry.has_term(crosswalk.source_vocab, source_term):
            raise NotFoundError(
                f"term {source_term!r} not registered in {crosswalk.source_vocab!r}"
            )
        if mapping.target is not None:
            for member in mapping.target.terms:
                if not self.registry.has_term(crosswalk.target_vocab, member):
                    raise NotFoundError(
                        f"term {member!r} not registered in {crosswalk.target_vocab!r}"
                    )
        with self._lock:
            if mapping.triple in crosswalk._triples:
                raise ConflictError(
                    f"duplicate mapping {mapping.label!r} in {crosswalk_id!r}"
                )
            mapping_id = f"{crosswalk_id}:{len(crosswalk.mappings) + 1}"
            stored = replace(mapping, mapping_id=mapping_id)
            crosswalk.mappings.append(stored)
            crosswalk._triples.add(stored.triple)
            self._by_source.setdefault(source_term, {}).setdefault(
                crosswalk_id, []
            ).append(stored)
            if stored.target is not None:
                for member in stored.target.terms:
                    self._by_target.setdefault(member, {}).setdefault(
                        crosswalk_id, []
                    ).append(stored)
        return mapping_id

    def mappings_from(
        self,
        term: str,
        source_vocab: str | None = None,
        relations: set[RelationType] | None = None,
        min_rating: RelevanceRating | None = None,
        target_vocabs: set[str] | None = None,
    ) -> list[tuple[Crosswalk, Mapping]]:
        """All mappings whose source equals the (normalized) term.

        Ordered by crosswalk id, then insertion order within a crosswalk.
        """
        normalized = normalize_term(term)
        per_crosswalk = self._by_source.get(normalized, {})
        results: list[tuple[Crosswalk, Mapping]] = []
        for crosswalk_id in sorted(per_crosswalk):
            crosswalk = self._crosswalks[crosswalk_id]
            if source_vocab is not None and crosswalk.source_vocab != source_vocab:
                continue
            if target_vocabs is not None and crosswalk.target_vocab not in target_vocabs:
                continue
            for mapping in per_crosswalk[crosswalk_id]:
                if relations is not None and mapping.relation not in relations:
                    continue
                if not mapping.rating.meets(min_rating):
                    continue
                results.append((crosswalk, mapping))
        return results

    def mappings_to(
        self, term: str, target_vocab: str | None = None
    ) -> list[tuple[Crosswalk, Mapping]]:
        """All mappings whose target is the term or a combination containing it."""
        normalized = normalize_term(term)
        per_crosswalk = self._by_target.get(normalized, {})
        results: list[tuple[Crosswalk, Mapping]] = []
        for crosswalk_id in sorted(per_crosswalk):
            crosswalk = self._crosswalks[crosswalk_id]
            if target_vocab is not None and crosswalk.target_vocab != target_vocab:
                continue
            results.extend((crosswalk, m) for m in per_crosswalk[crosswalk_id])
        return results

    def stats(self) -> dict[str, CrosswalkStats]:
        """Per-crosswalk mapping tallies by relation type and rating."""
        out: dict[str, CrosswalkStats] = {}
        for crosswalk in self.crosswalks():
            relations = {r: 0 for r in RelationType}
            ratings = {r: 0 for r in RelevanceRating}
            for mapping in crosswalk.mappings:
                relations[mapping.relation] += 1
                ratings[mapping.rating] += 1
            out[crosswalk.id] = CrosswalkStats(
                mapping_count=len(crosswalk.mappings),
                relations=relations,
                ratings=ratings,
            )
        return out

    # ------------------------------------------------------------------
    # TSV persistence

    def import_tsv(self, stream: IO[str] | str) -> ImportReport:
        """Load crosswalk TSV; unknown vocabularies and terms are auto-registered.

        Malformed lines are reported with their line number and skipped;
        the import never aborts mid-stream. A missing or wrong header is a
        FormatError.
        """
        if isinstance(stream, str):
            stream = StringIO(stream)
        lines = iter(stream)
        try:
            header = next(lines).rstrip("\n")
        except StopIteration:
            raise FormatError(f"empty stream; expected {TSV_HEADER!r} header")
        if header != TSV_HEADER:
            raise FormatError(f"bad header {header!r}; expected {TSV_HEADER!r}")

        report = ImportReport()
        # source vocab -> crosswalk last used for it; context for null rows
        # whose target vocabulary column is empty.
        last_crosswalk_for: dict[str, Crosswalk] = {}
        for line_no, line in enumerate(lines, start=2):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                added_crosswalk = self._import_line(line, last_crosswalk_for)
            except KomoheLineError as exc:
                report.errors.append((line_no, str(exc)))
                continue
            report.mappings_added += 1
            report.crosswalks_created += added_crosswalk
        return report

    def _import_line(
        self, line: str, last_crosswalk_for: dict[str, Crosswalk]
    ) -> int:
        fields = line.split("\t")
        if len(fields) > 6:
            extra = fields[6:]
            if not (len(extra) == 1 and extra[0].lstrip().startswith("#")):
                raise KomoheLineError(f"expected at most 6 fields, got {len(fields)}")
            fields = fields[:6]
        if len(fields) < 3:
            raise KomoheLineError(f"expected 6 tab-separated fields, got {len(fields)}")
        fields += [""] * (6 - len(fields))
        source_vocab, source_term, relation_sym, target_vocab, target_terms, rating_text = fields

        try:
            relation = RelationType.parse(relation_sym)
            rating = RelevanceRating.parse(rating_text)
            source = Concept.single(source_term)
        except (InvalidMappingError, InvalidTermError) as exc:
            raise KomoheLineError(str(exc))

        if relation is RelationType.NULL:
            if target_terms.strip():
                raise KomoheLineError("null relation cannot carry target terms")
            target = None
        else:
            if not target_terms.strip():
                raise KomoheLineError(
                    f"relation {relation.value!r} requires target terms"
                )
            if not target_vocab:
                raise KomoheLineError("missing target vocabulary")
            members = target_terms.split(COMBINATION_JOIN)
            try:
                target = (
                    Concept.single(members[0])
                    if len(members) == 1
                    else Concept.combination(members)
                )
            except InvalidTermError as exc:
                raise KomoheLineError(str(exc))

        try:
            if not source_vocab:
                raise KomoheLineError("missing source vocabulary")
            self.registry.ensure_vocabulary(source_vocab)
            if target_vocab:
                self.registry.ensure_vocabulary(target_vocab)
        except InvalidTermError as exc:
            raise KomoheLineError(str(exc))

        if relation is RelationType.NULL and not target_vocab:
            context = last_crosswalk_for.get(source_vocab)
            if context is None:
                raise KomoheLineError(
                    "null row has no target vocabulary and no preceding "
                    f"crosswalk for source vocabulary {source_vocab!r}"
                )
            crosswalk, created = context, False
        else:
            try:
                crosswalk, created = self.ensure_crosswalk(source_vocab, target_vocab)
            except (InvalidMappingError, ConflictError) as exc:
                raise KomoheLineError(str(exc))
        last_crosswalk_for[source_vocab] = crosswalk

        self.registry.add_term(source_vocab, source_term)
        if target is not None:
            for member in target.terms:
                self.registry.add_term(crosswalk.target_vocab, member)
        mapping = Mapping(source=source, relation=relation, target=target, rating=rating)
        try:
            self.add_mapping(crosswalk.id, mapping)
        except ConflictError as exc:
            raise KomoheLineError(str(exc))
        return 1 if created else 0

    def export_tsv(self, crosswalk_ids: Iterable[str] | None = None) -> str:
        """Render crosswalks as TSV; re-importing reproduces the store.

        One block per crosswalk; data lines sorted by source term, then by
        insertion order. Null rows keep their crosswalk's target vocabulary
        in column 4.
        """
        if crosswalk_ids is None:
            selected = self.crosswalks()
        else:
            selected = [self.crosswalk(cid) for cid in crosswalk_ids]
        out = [TSV_HEADER]
        for crosswalk in selected:
            ordered = sorted(
                enumerate(crosswalk.mappings), key=lambda im: (im[1].source.terms[0], im[0])
            )
            for _, mapping in ordered:
                target_terms = mapping.target.label if mapping.target else ""
                out.append(
                    "\t".join(
                        (
                            crosswalk.source_vocab,
                            mapping.source.terms[0],
                            mapping.relation.value,
                            crosswalk.target_vocab,
                            target_terms,
                            mapping.rating.value,
                        )
                    )
                )
        return "\n".join(out) + "\n"


class KomoheLineError(Exception):
    """Internal: a single TSV line failed; reported, never fatal."""
