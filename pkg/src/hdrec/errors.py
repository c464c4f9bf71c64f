"""Exception types shared across the package.

Validation problems raise ``ParameterError`` / ``DomainTagError`` / ``ShapeError``
(all ValueError subclasses, CLI exit code 2); numerical breakdowns raise
``NumericalError`` subclasses (CLI exit code 3).  File parsing keeps distinct
classes so callers can tell a bad header from a bad payload.
"""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class DomainTagError(ValueError):
    """A stack is in the wrong domain (transmission vs line-integral) for an op."""


class ShapeError(ValueError):
    """Array dimensions violate a documented contract."""


class ParseError(ValueError):
    """Base class for file-format problems."""


class MalformedHeaderError(ParseError):
    """Header file is missing keys, has a bad magic, or unparseable values."""


class LengthMismatchError(ParseError):
    """Payload length disagrees with the header dimensions."""


class UnknownDomainError(ParseError):
    """Header names a domain tag this code does not know."""


class InvariantViolationError(ParseError):
    """File decodes but the resulting value breaks a type invariant."""


class PlacementError(RuntimeError):
    """Phantom generator ran out of rejection-sampling attempts."""


class NumericalError(RuntimeError):
    """Base class for numerical failures (divergence, non-finite loss)."""


class TrainingAbortError(NumericalError):
    """Training hit a non-finite loss; message names epoch and batch."""
