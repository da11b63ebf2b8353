"""Spot-check mappings against a descriptor-indexed document corpus.

A corpus is a set of documents, each carrying (vocabulary, term)
descriptor pairs. Assessing a mapping counts documents indexed with the
source term and documents indexed with the complete target concept;
combination targets count conjunctively, so a document carrying only some
members does not count. Assessment reads the store and corpus, never
writes.

Corpus TSV (UTF-8, LF): header `#corpus v1`, then
`doc_id<TAB>vocab<TAB>term` lines; `#` lines and blank lines ignored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from io import StringIO
from typing import IO

from .errors import FormatError, InvalidMappingError, InvalidTermError
from .registry import normalize_term
from .store import CrosswalkStore, Mapping, RelationType

CORPUS_HEADER = "#corpus v1"


@dataclass
class Corpus:
    """Documents keyed by id; each document is a set of (vocab, term) descriptors."""

    docs: dict[str, set[tuple[str, str]]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.docs)

    def add_descriptor(self, doc_id: str, vocab: str, term: str) -> None:
        self.docs.setdefault(doc_id, set()).add((vocab, normalize_term(term)))

    def count_with(self, vocab: str, term: str) -> int:
        key = (vocab, normalize_term(term))
        return sum(1 for descriptors in self.docs.values() if key in descriptors)

    def count_with_all(self, vocab: str, terms: tuple[str, ...]) -> int:
        keys = {(vocab, normalize_term(t)) for t in terms}
        return sum(1 for descriptors in self.docs.values() if keys <= descriptors)


@dataclass
class CorpusLoad:
    corpus: Corpus
    errors: list[tuple[int, str]] = field(default_factory=list)


def load_corpus(stream: IO[str] | str) -> CorpusLoad:
    """Parse a corpus TSV; malformed lines are reported and skipped."""
    if isinstance(stream, str):
        stream = StringIO(stream)
    lines = iter(stream)
    try:
        header = next(lines).rstrip("\n")
    except StopIteration:
        raise FormatError(f"empty stream; expected {CORPUS_HEADER!r} header")
    if header != CORPUS_HEADER:
        raise FormatError(f"bad header {header!r}; expected {CORPUS_HEADER!r}")
    load = CorpusLoad(corpus=Corpus())
    for line_no, line in enumerate(lines, start=2):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            load.errors.append((line_no, f"expected 3 fields, got {len(fields)}"))
            continue
        doc_id, vocab, term = fields
        if not doc_id.strip() or not vocab.strip():
            load.errors.append((line_no, "empty doc id or vocabulary"))
            continue
        try:
            load.corpus.add_descriptor(doc_id, vocab, term)
        except InvalidTermError as exc:
            load.errors.append((line_no, str(exc)))
    return load


class Verdict(Enum):
    OK = "OK"
    EMPTY_TARGET = "EMPTY_TARGET"


@dataclass
class Assessment:
    source_hits: int
    target_hits: int
    verdict: Verdict


def assess_mapping(
    mapping: Mapping, source_vocab: str, target_vocab: str, corpus: Corpus
) -> Assessment:
    """Count corpus documents carrying the source term and the full target concept.

    Null mappings have nothing to check and are rejected.
    """
    if mapping.relation is RelationType.NULL or mapping.target is None:
        raise InvalidMappingError("cannot assess a null mapping")
    source_hits = corpus.count_with(source_vocab, mapping.source.terms[0])
    target_hits = corpus.count_with_all(target_vocab, mapping.target.terms)
    verdict = Verdict.OK if target_hits > 0 else Verdict.EMPTY_TARGET
    return Assessment(source_hits=source_hits, target_hits=target_hits, verdict=verdict)


@dataclass
class AssessmentRow:
    mapping: Mapping
    result: Assessment


@dataclass
class AssessmentReport:
    crosswalk_id: str
    sample_size: int
    rows: list[AssessmentRow] = field(default_factory=list)

    @property
    def empty_target_rate(self) -> float:
        if not self.rows:
            return 0.0
        empties = sum(1 for r in self.rows if r.result.verdict is Verdict.EMPTY_TARGET)
        return empties / len(self.rows)

    def to_tsv(self) -> str:
        """Header plus `mapping<TAB>source_hits<TAB>target_hits<TAB>verdict` lines."""
        lines = ["mapping\tsource_hits\ttarget_hits\tverdict"]
        for row in self.rows:
            lines.append(
                "\t".join(
                    (
                        row.mapping.label,
                        str(row.result.source_hits),
                        str(row.result.target_hits),
                        row.result.verdict.value,
                    )
                )
            )
        return "\n".join(lines) + "\n"


def sample_assessment(
    store: CrosswalkStore,
    crosswalk_id: str,
    corpus: Corpus,
    sample_size: int,
    seed: int,
) -> AssessmentReport:
    """Assess a seeded pseudo-random sample of a crosswalk's non-null mappings.

    The same seed always selects the same sample. sample_size is clamped to
    the number of assessable mappings; rows come back in store order.
    """
    if sample_size < 1:
        raise InvalidMappingError("sample size must be at least 1")
    crosswalk = store.crosswalk(crosswalk_id)
    candidates = [m for m in crosswalk.mappings if m.relation is not RelationType.NULL]
    k = min(sample_size, len(candidates))
    rng = random.Random(seed)
    chosen = set(rng.sample(candidates, k))
    ordered = [m for m in candidates if m in chosen]
    report = AssessmentReport(crosswalk_id=crosswalk_id, sample_size=k)
    for mapping in ordered:
        result = assess_mapping(mapping, crosswalk.source_vocab, crosswalk.target_vocab, corpus)
        report.rows.append(AssessmentRow(mapping=mapping, result=result))
    return report
