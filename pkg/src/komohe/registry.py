"""Vocabulary registry and the canonical term normalization used everywhere.

Every string that enters the mapping network goes through
:func:`normalize_term` exactly once; lookups compare normalized keys only.
The registry is read-mostly: mutation is serialized behind a lock, readers
see a stable snapshot.
"""

from __future__ import annotations

import shlex
import threading
import unicodedata
from dataclasses import dataclass, field
from typing import IO, Iterable

from .errors import ConflictError, FormatError, InvalidTermError, NotFoundError

TERMS_HEADER = "#terms"

# ISO 639-1 two-letter codes.
ISO_639_1 = frozenset(
    """
    aa ab ae af ak am an ar as av ay az ba be bg bh bi bm bn bo br bs ca ce
    ch co cr cs cu cv cy da de dv dz ee el en eo es et eu fa ff fi fj fo fr
    fy ga gd gl gn gu gv ha he hi ho hr ht hu hy hz ia id ie ig ii ik io is
    it iu ja jv ka kg ki kj kk kl km kn ko kr ks ku kv kw ky la lb lg li ln
    lo lt lu lv mg mh mi mk ml mn mr ms mt my na nb nd ne ng nl nn no nr nv
    ny oc oj om or os pa pi pl ps pt qu rm rn ro ru rw sa sc sd se sg si sk
    sl sm sn so sq sr ss st su sv sw ta te tg th ti tk tl tn to tr ts tt tw
    ty ug uk ur uz ve vi vo wa wo xh yi yo za zh zu
    """.split()
)


def normalize_term(raw: str) -> str:
    """Return the canonical lookup form of a term.

    Case-folds, applies Unicode canonical composition (NFC), strips
    leading/trailing whitespace, and collapses internal whitespace runs to
    single spaces. Idempotent: normalize_term(normalize_term(x)) ==
    normalize_term(x).

    Raises InvalidTermError for empty or whitespace-only input.
    """
    folded = unicodedata.normalize("NFC", raw.casefold())
    collapsed = " ".join(folded.split())
    if not collapsed:
        raise InvalidTermError("term is empty or whitespace-only")
    return collapsed


def _validate_vocab_id(vocab_id: str) -> None:
    if not vocab_id:
        raise InvalidTermError("vocabulary id must be non-empty")
    if any(ch.isspace() for ch in vocab_id):
        raise InvalidTermError(f"vocabulary id {vocab_id!r} contains whitespace")


@dataclass
class Vocabulary:
    """A named controlled vocabulary (thesaurus, classification, ...)."""

    id: str
    name: str = ""
    language: str = "en"
    discipline: str = ""

    def __post_init__(self) -> None:
        _validate_vocab_id(self.id)
        if self.language not in ISO_639_1:
            raise InvalidTermError(
                f"language {self.language!r} is not a two-letter ISO 639-1 code"
            )
        if not self.name:
            self.name = self.id


@dataclass(frozen=True)
class Term:
    """A single controlled term: normalized lookup key plus original display form."""

    vocabulary: str
    normalized: str
    display: str


class VocabularyRegistry:
    """Owns vocabularies and their term lists."""

    def __init__(self) -> None:
        self._vocabularies: dict[str, Vocabulary] = {}
        self._terms: dict[str, dict[str, Term]] = {}
        self._lock = threading.Lock()

    def register_vocabulary(self, vocabulary: Vocabulary) -> str:
        """Register a new vocabulary and return its id.

        Raises ConflictError if the id is already taken.
        """
        with self._lock:
            if vocabulary.id in self._vocabularies:
                raise ConflictError(f"vocabulary {vocabulary.id!r} already registered")
            self._vocabularies[vocabulary.id] = vocabulary
            self._terms[vocabulary.id] = {}
        return vocabulary.id

    def ensure_vocabulary(self, vocab_id: str, language: str = "en") -> Vocabulary:
        """Return the vocabulary, auto-registering it if unknown."""
        with self._lock:
            existing = self._vocabularies.get(vocab_id)
            if existing is not None:
                return existing
            vocabulary = Vocabulary(id=vocab_id, language=language)
            self._vocabularies[vocab_id] = vocabulary
            self._terms[vocab_id] = {}
            return vocabulary

    def vocabulary(self, vocab_id: str) -> Vocabulary:
        try:
            return self._vocabularies[vocab_id]
        except KeyError:
            raise NotFoundError(f"unknown vocabulary {vocab_id!r}") from None

    def has_vocabulary(self, vocab_id: str) -> bool:
        return vocab_id in self._vocabularies

    def vocabularies(self) -> list[Vocabulary]:
        return sorted(self._vocabularies.values(), key=lambda v: v.id)

    def vocabularies_by_language(self, language: str) -> list[Vocabulary]:
        return [v for v in self.vocabularies() if v.language == language]

    def term_count(self, vocab_id: str) -> int:
        """Number of distinct normalized terms stored for the vocabulary."""
        self.vocabulary(vocab_id)
        return len(self._terms[vocab_id])

    def add_term(self, vocab_id: str, display: str) -> Term:
        """Store a term under its normalized key.

        Re-adding a term whose normalized form already exists is a no-op
        returning the stored term; the first display form wins.
        """
        self.vocabulary(vocab_id)
        normalized = normalize_term(display)
        with self._lock:
            existing = self._terms[vocab_id].get(normalized)
            if existing is not None:
                return existing
            # Outer whitespace would not survive an export/import cycle,
            # so trim it; inner spacing is part of the display form.
            term = Term(vocabulary=vocab_id, normalized=normalized, display=display.strip())
            self._terms[vocab_id][normalized] = term
            return term

    def lookup_term(self, vocab_id: str, raw: str) -> Term | None:
        """Find a term by any orthographic variant of its normalized form."""
        self.vocabulary(vocab_id)
        return self._terms[vocab_id].get(normalize_term(raw))

    def has_term(self, vocab_id: str, normalized: str) -> bool:
        return normalized in self._terms.get(vocab_id, {})

    def terms(self, vocab_id: str) -> list[Term]:
        """All terms of a vocabulary, sorted by normalized key."""
        self.vocabulary(vocab_id)
        return [self._terms[vocab_id][k] for k in sorted(self._terms[vocab_id])]

    # ------------------------------------------------------------------
    # Term-list files: UTF-8, LF-terminated, one display term per line.
    # Line 1 is `#terms <vocab-id>`, optionally followed by key=value
    # metadata (lang=, name=, discipline=). Blank lines and `#` lines after
    # the header are ignored.
    # ------------------------------------------------------------------

    def import_terms(self, stream: IO[str] | Iterable[str], vocab_id: str | None = None) -> int:
        """Load a term-list file; returns the number of terms added.

        Auto-registers the vocabulary named in the header. If `vocab_id` is
        given it must match the header.
        """
        lines = iter(stream)
        try:
            header = next(lines).rstrip("\n")
        except StopIteration:
            raise FormatError("term list is empty; expected `#terms <vocab-id>` header")
        fields = shlex.split(header)
        if len(fields) < 2 or fields[0] != TERMS_HEADER:
            raise FormatError(f"bad term-list header {header!r}")
        file_vocab = fields[1]
        if vocab_id is not None and vocab_id != file_vocab:
            raise FormatError(
                f"term list is for vocabulary {file_vocab!r}, not {vocab_id!r}"
            )
        meta = dict(f.split("=", 1) for f in fields[2:] if "=" in f)
        if self.has_vocabulary(file_vocab):
            vocab = self.vocabulary(file_vocab)
        else:
            vocab = Vocabulary(
                id=file_vocab,
                name=meta.get("name", ""),
                language=meta.get("lang", "en"),
                discipline=meta.get("discipline", ""),
            )
            self.register_vocabulary(vocab)
        before = self.term_count(file_vocab)
        for line in lines:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            self.add_term(file_vocab, line)
        return self.term_count(file_vocab) - before

    def export_terms(self, vocab_id: str) -> str:
        """Render a vocabulary as a term-list file (display forms, sorted by key)."""
        vocab = self.vocabulary(vocab_id)
        header = f"{TERMS_HEADER} {vocab.id} lang={vocab.language}"
        if vocab.name and vocab.name != vocab.id:
            header += f" name={shlex.quote(vocab.name)}"
        if vocab.discipline:
            header += f" discipline={shlex.quote(vocab.discipline)}"
        lines = [header]
        lines.extend(term.display for term in self.terms(vocab_id))
        return "\n".join(lines) + "\n"
