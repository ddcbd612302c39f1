"""Exception hierarchy shared across the package.

Every error that crosses a module boundary derives from OntogenError so
callers (and the CLI) can map failures onto exit codes without string
matching.
"""


class OntogenError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(OntogenError):
    """Invalid or incomplete configuration (CLI exit code 2)."""


class IngestionError(OntogenError):
    """Corpus file unreadable or structurally unusable."""


class LexiconError(OntogenError):
    """Topic lexicon violates its invariants (empty, duplicate labels, ...)."""


class TopicNotFoundError(OntogenError, LookupError):
    """A topic id or label is absent from the statistics it was looked up in."""


class UndefinedFeatureError(OntogenError):
    """A feature is mathematically undefined for the given counts."""


class EncodingError(OntogenError):
    """A relation label outside the closed four-class set was supplied."""


class TripleParseError(OntogenError):
    """A labeled-triple file contains an unparseable line."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class TrainingError(OntogenError):
    """Training input violates the trainer's preconditions."""


class ModelFormatError(OntogenError):
    """A serialized model has an unknown or corrupt format."""


class PredictionError(OntogenError):
    """A prediction request cannot be served for the given vector."""


class ProviderError(OntogenError):
    """An external prediction or embedding provider failed."""


class PairSetError(OntogenError):
    """A classified pair set is missing the inverse ordering of a pair."""


class InvariantViolation(OntogenError):
    """A taxonomy or ontology structure violates its invariants."""


class ReplayError(OntogenError):
    """An edit log cannot be replayed over the given base ontology."""


class DependencyError(OntogenError):
    """A pipeline stage's upstream artifact is missing (CLI exit code 3)."""


class StaleArtifactError(DependencyError):
    """An upstream artifact exists but its digest no longer matches."""


class StageError(OntogenError):
    """A pipeline stage failed while running (CLI exit code 4)."""


class ServiceNotReadyError(OntogenError):
    """The review service has no ontology loaded."""


class EditRejected(OntogenError):
    """An expert edit failed validation; state was left untouched."""

    def __init__(self, reason: str, detail=None):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail
