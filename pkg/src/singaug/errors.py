"""Exception hierarchy shared by all singaug modules.

The CLI maps these onto exit codes: usage/config problems exit 1, data and
format problems exit 2, training divergence exits 3.
"""


class SingaugError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SingaugError):
    """A label file line could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(SingaugError):
    """A domain invariant was violated (event ordering, offsets, ranges...)."""


class UndefinedPitchError(ValidationError):
    """Pitch statistics requested for a score with no non-rest events."""


class RangeError(SingaugError):
    """A transposition or frequency shift left the representable range."""


class FormatError(SingaugError):
    """An audio or checkpoint file is not in the expected on-disk format."""


class ParameterError(SingaugError):
    """An argument value is outside its documented domain."""


class ShapeError(SingaugError):
    """Matrix/sequence dimensions do not line up."""


class VocabularyError(SingaugError):
    """A phoneme or pitch id is not covered by the vocabulary/embedding."""


class AlignmentError(SingaugError):
    """Frame-level labels and features disagree on frame counts."""


class DataError(SingaugError):
    """Non-finite or otherwise unusable numeric data was encountered."""


class InfeasibleError(SingaugError):
    """A frame budget or similar constraint cannot be satisfied."""


class ConfigError(SingaugError):
    """A run configuration failed validation."""


class CompatibilityError(SingaugError):
    """A checkpoint does not match the running code or configuration."""


class DivergenceError(SingaugError):
    """Training produced a non-finite loss."""


class GradientHealthError(SingaugError):
    """An analytic gradient came back non-finite during checking."""
