"""Exception hierarchy shared across the package."""


class SatlabError(Exception):
    """Base class for all domain errors raised by this package."""


class MalformedFormulaError(SatlabError):
    """A literal references variable 0 or a variable beyond the declared count."""


class DimacsError(SatlabError):
    """DIMACS text could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidSpecError(SatlabError):
    """A generation spec violates its own constraints (k > n, fractional m, ...)."""


class BudgetError(SatlabError):
    """An exact computation was requested beyond its configured size cap."""


class AbsentValueError(SatlabError):
    """A derived quantity was requested from a record missing its inputs."""


class EncodingError(SatlabError):
    """A prompt could not be built (pool exhaustion, bank too small, ...)."""


class TranslateParseError(SatlabError):
    """A translated CNF answer is not parseable as a clause conjunction."""

    def __init__(self, message: str, unknown_items: list[str] | None = None):
        super().__init__(message)
        self.unknown_items = unknown_items or []


class TransportError(SatlabError):
    """All retries against the completions endpoint were exhausted."""


class RequestError(SatlabError):
    """The completions endpoint rejected the request (non-retryable 4xx)."""


class NoTraceError(SatlabError):
    """Trace export was requested for a solve that ran with tracing disabled."""


class ConfigError(SatlabError):
    """An experiment or CLI configuration is inconsistent."""
