"""Exception hierarchy shared across the package.

Anything derived from InputError means the caller handed us bad data
(malformed files, queries that violate an engine's preconditions,
blown configuration caps).  The command line maps those to exit code 2;
everything else is an internal failure and maps to exit code 1.
"""


class DiverseCQError(Exception):
    """Base class for package errors."""


class InputError(DiverseCQError):
    """Invalid user-supplied input or configuration."""


class LoadError(InputError):
    """Database directory, schema file, or relation file is malformed."""


class QueryParseError(InputError):
    """Query text rejected; carries a 1-based character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UniverseError(InputError):
    """A tuple lies outside the universe of a volume assignment."""


class LimitExceededError(InputError):
    """A configurable work cap (subsets, extensions, set size) was hit."""


class EngineCompatibilityError(InputError):
    """Query/volume pairing unsupported by the requested engine."""
