"""Exception types shared across the package."""


class LexidotError(Exception):
    """Base class for all lexidot errors."""


class RecordError(LexidotError):
    """A line of a line-delimited input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(LexidotError):
    """A record or value violates a schema or data invariant."""


class SpanError(ValidationError):
    """A target span does not fit inside its sentence."""


class UnknownLemmaError(LexidotError):
    """Lemma not present in the inventory or registry."""


class DiscardSignal(LexidotError):
    """Instance dropped: its lemma has fewer than two predefined senses."""

    def __init__(self, lemma: str, n_senses: int):
        self.lemma = lemma
        self.n_senses = n_senses
        super().__init__(f"lemma {lemma!r} has {n_senses} sense(s); need at least 2")


class BackendError(LexidotError):
    """The external scorer misbehaved (handshake, timeout, protocol, alignment)."""


class WikidataTransportError(LexidotError):
    """Transient client failure; retryable, distinct from a missing entry."""


class UnmappedCategory(LexidotError):
    """None of an entry's categories appear in the category map."""
