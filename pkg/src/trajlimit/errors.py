"""Exception types shared across the package.

All of these derive from ValueError so callers that do not care about the
distinction can catch one base class.  The CLI maps them onto exit codes:
data problems (parse/validation/coding) exit with 2, configuration problems
with 3.
"""


class ParseError(ValueError):
    """A text input could not be parsed.  Carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ValidationError(ValueError):
    """Structurally parseable input that violates a data invariant."""


class ConfigurationError(ValueError):
    """A setting or combination of settings that cannot be honoured."""


class LabelingError(ValueError):
    """A sequence cannot be encoded or decoded under a labeling scheme."""


class CodingError(ValueError):
    """Invalid input to the dictionary coder."""


class CorruptStreamError(CodingError):
    """A code stream that no encoder state could have produced."""
