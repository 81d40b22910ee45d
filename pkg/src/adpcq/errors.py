"""Exception hierarchy shared by every module of the package."""


class AdpError(Exception):
    """Base class for all errors raised by adpcq."""


class QueryError(AdpError, ValueError):
    """A query violates a structural invariant."""


class SelfJoinError(QueryError):
    pass


class DuplicateAttributeSetError(QueryError):
    pass


class UnknownHeadAttributeError(QueryError):
    pass


class SelectionError(QueryError):
    pass


class ParseError(QueryError):
    """Raised by the text parser; carries the collected diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        msg = first.message if first else "parse error"
        if first is not None:
            msg = f"{msg} (at offset {first.offset})"
        super().__init__(msg)


class DataError(AdpError, ValueError):
    """Malformed instance data (CSV header mismatch, ragged rows, ...)."""


class KOutOfRangeError(AdpError, ValueError):
    """k is outside 1..|Q(D)|."""


class InfeasibleError(AdpError):
    """A heuristic cannot produce a solution under its own restrictions."""


class CapExceededError(AdpError):
    """An oracle refused to run because the instance is above its cap."""


class InternalInconsistency(AdpError):
    """Two routes that must agree did not. Never silently repaired."""

    def __init__(self, message, **artifacts):
        super().__init__(message)
        self.artifacts = artifacts
