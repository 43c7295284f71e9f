"""Exception hierarchy shared by every ehfbl module."""


class EhfblError(Exception):
    """Base class for library errors."""


class DomainError(EhfblError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericInconsistencyError(EhfblError, ArithmeticError):
    """Two independent numerical routes disagree beyond tolerance."""


class RegimeError(EhfblError, ValueError):
    """The asymptotic closed form is evaluated outside its regime."""


class ConfigParseError(EhfblError, ValueError):
    """Malformed configuration file or unknown keys."""


class ValidationError(EhfblError, ValueError):
    """User-supplied input parsed but breaks an invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigValidationError(ValidationError):
    """Configuration parsed but breaks an invariant."""
