"""Exception types shared across the pipeline."""


class AlohaError(Exception):
    """Base class for all library errors."""


class EmptyText(AlohaError):
    """Raised when an operation receives all-whitespace or empty input."""


class EmptyQuery(EmptyText):
    """Raised when a retrieval query is empty after tokenization."""


class ProviderUnavailable(AlohaError):
    """An external provider endpoint could not serve the request.

    Callers are expected to fall back to the built-in implementation; the
    error only propagates when no built-in exists for the capability.
    """

    def __init__(self, provider: str, reason: str = ""):
        self.provider = provider
        self.reason = reason
        super().__init__(f"provider '{provider}' unavailable" + (f": {reason}" if reason else ""))


class DimensionMismatch(AlohaError):
    """Vector dimensions disagree."""


class EmbeddingDimensionMismatch(DimensionMismatch):
    """An embedding batch produced vectors of inconsistent dimensionality."""


class ZeroVector(AlohaError):
    """Cosine similarity is undefined for a zero-norm vector."""


class EmptyTrainingSet(AlohaError):
    """An intent index cannot be built from zero examples."""


class RaggedTable(AlohaError):
    """A table row's length does not match its header."""


class SchemaError(AlohaError):
    """A corpus record failed validation.

    Carries the 1-based line number of the offending JSONL record.
    """

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class InvalidTable(AlohaError):
    """A tabular document body is not a well-formed pipe table."""

    def __init__(self, doc_id: str, reason: str = ""):
        self.doc_id = doc_id
        super().__init__(f"document '{doc_id}' has an invalid table body" + (f": {reason}" if reason else ""))


class MissingIntentTag(AlohaError):
    """A tabular document arrived without an intent tag."""

    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"tabular document '{doc_id}' is missing an intent tag")


class DuplicateToolName(AlohaError):
    """A tool with this name is already registered."""


class MalformedTemplate(AlohaError):
    """A URL template contains placeholders with no matching parameter."""
