"""Exception hierarchy shared by all komohe modules."""

from __future__ import annotations


class KomoheError(Exception):
    """Base class for all domain errors raised by this package."""


class NotFoundError(KomoheError):
    """A vocabulary, term, crosswalk, or resource does not exist."""


class ConflictError(KomoheError):
    """An insert collides with something already stored."""


class InvalidTermError(KomoheError):
    """A term is empty or otherwise unusable after normalization."""


class InvalidMappingError(KomoheError):
    """A mapping violates the relation/target invariants."""


class FormatError(KomoheError):
    """A stream does not carry the expected header or framing."""


class QueryParseError(KomoheError):
    """Boolean query text could not be parsed.

    `position` is the 0-based character offset the parser was looking at.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position
