"""Exception hierarchy shared across the package."""


class TouchTellError(Exception):
    """Base class for all package errors."""


class ParseError(TouchTellError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(TouchTellError, ValueError):
    """A value parsed fine but violates a domain invariant."""


class RangeError(ValidationError):
    pass


class FormatError(TouchTellError, ValueError):
    """Audio container or encoding mismatch."""


class DomainError(TouchTellError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(TouchTellError, ValueError):
    pass


class FramingError(TouchTellError, ValueError):
    pass


class IntegrityError(TouchTellError, ValueError):
    pass


class LengthError(TouchTellError, ValueError):
    pass


class SizeError(TouchTellError, ValueError):
    pass


class DegenerateDataError(TouchTellError, ValueError):
    pass


class InsufficientDataError(DegenerateDataError):
    pass


class ConfigurationError(TouchTellError, ValueError):
    pass


class VocabularyError(TouchTellError, ValueError):
    pass


class DependencyError(TouchTellError, RuntimeError):
    """A pipeline input (file, feature row) that should exist does not."""
