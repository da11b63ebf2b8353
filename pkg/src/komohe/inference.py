"""Indirect mappings through a pivot vocabulary, and variant-conflict detection.

Two stored mappings A->B and B->C compose into a proposed A->C mapping
when the middle concept is a single term shared by both hops and the two
relations compose cleanly. Inferred mappings are proposals: they are
returned, never written into the store.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .errors import NotFoundError
from .store import TSV_HEADER, Concept, CrosswalkStore, RelationType, RelevanceRating

_EQ = RelationType.EQ
_BROADER = RelationType.BROADER_TARGET
_NARROWER = RelationType.NARROWER_TARGET
_ASSOC = RelationType.ASSOC

# Composition of two chained relations. Equivalence is the identity;
# same-direction hierarchy chains keep their direction; opposite-direction
# hierarchy chains and chained associations are indeterminate. Pairs absent
# from the table must not be inferred.
COMPOSITION: dict[tuple[RelationType, RelationType], RelationType] = {
    (_EQ, _EQ): _EQ,
    (_EQ, _BROADER): _BROADER,
    (_EQ, _NARROWER): _NARROWER,
    (_EQ, _ASSOC): _ASSOC,
    (_BROADER, _EQ): _BROADER,
    (_NARROWER, _EQ): _NARROWER,
    (_ASSOC, _EQ): _ASSOC,
    (_BROADER, _BROADER): _BROADER,
    (_NARROWER, _NARROWER): _NARROWER,
}

_DEMOTED = {
    RelevanceRating.HIGH: RelevanceRating.MEDIUM,
    RelevanceRating.MEDIUM: RelevanceRating.LOW,
    RelevanceRating.LOW: RelevanceRating.LOW,
}


def compose_relations(first: RelationType, second: RelationType) -> RelationType | None:
    """Relation of a two-hop chain, or None when nothing may be inferred."""
    return COMPOSITION.get((first, second))


def combined_confidence(first: RelevanceRating, second: RelevanceRating) -> RelevanceRating:
    """One level below the weaker hop; LOW stays LOW, UNRATED propagates."""
    if RelevanceRating.UNRATED in (first, second):
        return RelevanceRating.UNRATED
    weaker = first if first.rank <= second.rank else second
    return _DEMOTED[weaker]


@dataclass(frozen=True)
class InferredMapping:
    """A proposed mapping composed from two stored hops via a pivot vocabulary."""

    source: Concept
    target: Concept
    relation: RelationType
    confidence: RelevanceRating
    path: tuple[str, str]
    pivot_vocab: str


def infer_pivot(
    store: CrosswalkStore, source_vocab: str, target_vocab: str, pivot_vocab: str
) -> list[InferredMapping]:
    """Compose source->pivot with pivot->target mappings.

    Both hops must have single-term targets; the pivot term must match
    exactly. Results are deduplicated on (source, relation, target),
    keeping the highest confidence, and sorted by source term, relation,
    target.
    """
    first_hop = store.find_crosswalk(source_vocab, pivot_vocab)
    if first_hop is None:
        raise NotFoundError(f"no crosswalk {source_vocab!r} -> {pivot_vocab!r}")
    second_hop = store.find_crosswalk(pivot_vocab, target_vocab)
    if second_hop is None:
        raise NotFoundError(f"no crosswalk {pivot_vocab!r} -> {target_vocab!r}")

    by_pivot_term: dict[str, list] = {}
    for m2 in second_hop.mappings:
        if m2.target is not None and m2.target.is_single:
            by_pivot_term.setdefault(m2.source.terms[0], []).append(m2)

    best: dict[tuple, InferredMapping] = {}
    for m1 in first_hop.mappings:
        if m1.target is None or not m1.target.is_single:
            continue
        for m2 in by_pivot_term.get(m1.target.terms[0], ()):
            relation = compose_relations(m1.relation, m2.relation)
            if relation is None:
                continue
            inferred = InferredMapping(
                source=m1.source,
                target=m2.target,
                relation=relation,
                confidence=combined_confidence(m1.rating, m2.rating),
                path=(m1.mapping_id, m2.mapping_id),
                pivot_vocab=pivot_vocab,
            )
            key = (inferred.source.terms, relation, inferred.target.terms)
            current = best.get(key)
            if current is None or inferred.confidence.rank > current.confidence.rank:
                best[key] = inferred
    return sorted(
        best.values(),
        key=lambda m: (m.source.terms, m.relation.value, m.target.terms),
    )


def export_inferred_tsv(
    inferred: list[InferredMapping], source_vocab: str, target_vocab: str
) -> str:
    """Inferred mappings in crosswalk TSV form with a trailing `# via:` column."""
    out = [TSV_HEADER]
    for m in inferred:
        out.append(
            "\t".join(
                (
                    source_vocab,
                    m.source.terms[0],
                    m.relation.value,
                    target_vocab,
                    m.target.label,
                    m.confidence.value,
                    f"# via:{m.pivot_vocab}",
                )
            )
        )
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class VariantConflict:
    """The same term in two vocabularies maps to different targets in a third."""

    term: str
    vocab_pair: tuple[str, str]
    target_vocab: str
    targets: tuple[Concept, Concept]


def detect_variant_mappings(store: CrosswalkStore, target_vocab: str) -> list[VariantConflict]:
    """Find terms whose equivalence targets disagree across source vocabularies.

    Considers EQ mappings into `target_vocab` only. For every term mapped
    from two or more source vocabularies, each differing target pair is one
    conflict; agreeing targets produce none.
    """
    # term -> source vocab -> EQ target concepts, insertion-ordered
    targets_by_term: dict[str, dict[str, list[Concept]]] = {}
    for crosswalk in store.crosswalks():
        if crosswalk.target_vocab != target_vocab:
            continue
        for mapping in crosswalk.mappings:
            if mapping.relation is not RelationType.EQ or mapping.target is None:
                continue
            per_vocab = targets_by_term.setdefault(mapping.source.terms[0], {})
            per_vocab.setdefault(crosswalk.source_vocab, []).append(mapping.target)

    conflicts: list[VariantConflict] = []
    for term in sorted(targets_by_term):
        per_vocab = targets_by_term[term]
        if len(per_vocab) < 2:
            continue
        for vocab_a, vocab_b in combinations(sorted(per_vocab), 2):
            seen: set[tuple] = set()
            for target_a in per_vocab[vocab_a]:
                for target_b in per_vocab[vocab_b]:
                    if target_a == target_b:
                        continue
                    key = (target_a.terms, target_b.terms)
                    if key in seen:
                        continue
                    seen.add(key)
                    conflicts.append(
                        VariantConflict(
                            term=term,
                            vocab_pair=(vocab_a, vocab_b),
                            target_vocab=target_vocab,
                            targets=(target_a, target_b),
                        )
                    )
    return conflicts
