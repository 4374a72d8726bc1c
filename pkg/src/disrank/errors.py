"""Shared exception types.

The CLI maps every :class:`DisrankError` to a nonzero exit code with the
message on stderr; anything else is a bug and is allowed to crash loudly.
"""


class DisrankError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DisrankError):
    """Malformed text input (TSV rows, config files)."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)


class ValidationError(DisrankError):
    """Well-formed input that violates a domain invariant."""


class InsufficientJudgmentsError(ValidationError):
    """Fewer than two judgments: pairwise disagreement is undefined."""


class FormatError(DisrankError):
    """Corrupt or truncated binary file."""

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        loc = f"{path}" if path is not None else ""
        if offset is not None:
            loc += f" @ byte {offset}"
        super().__init__(f"{loc}: {message}" if loc else message)


class MissingKeyError(DisrankError):
    """Embedding lookups that cannot be satisfied."""

    def __init__(self, keys):
        self.keys = list(keys)
        shown = ", ".join(self.keys[:10])
        more = "" if len(self.keys) <= 10 else f" (+{len(self.keys) - 10} more)"
        super().__init__(f"missing embedding key(s): {shown}{more}")


class ConfigError(DisrankError):
    """Invalid or unknown configuration values."""


class DegenerateRankingError(DisrankError):
    """Rank correlation requested on a constant vector."""


class DivergedError(DisrankError):
    """Training produced a non-finite loss; carries the partial history."""

    def __init__(self, message, history=None):
        self.history = history or []
        super().__init__(message)
