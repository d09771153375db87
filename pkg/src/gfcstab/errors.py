"""Exception types shared across the package."""


class GfcStabError(Exception):
    """Base class for all package errors."""


class ParameterError(GfcStabError, ValueError):
    """A parameter violates its documented invariant."""


class DomainError(GfcStabError, ValueError):
    """A state or input lies outside the domain of a function."""


class CertificateRefused(GfcStabError):
    """A stability certificate could not be issued.

    ``conditions`` lists every checked side condition, so callers can show
    which inequality failed.
    """

    def __init__(self, certificate: str, conditions):
        self.certificate = certificate
        self.conditions = tuple(conditions)
        failed = [c.describe() for c in self.conditions if not c.holds]
        super().__init__(f"{certificate} refused: " + "; ".join(failed or ["precondition failed"]))


class BracketError(GfcStabError, ValueError):
    """Both ends of a bisection bracket produced the same outcome."""


class ConfigError(GfcStabError):
    """Scenario configuration is malformed or semantically invalid."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 key: str | None = None):
        self.line = line
        self.column = column
        self.key = key
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)
