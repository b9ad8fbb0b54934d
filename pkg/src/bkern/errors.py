"""Shared exception hierarchy.

Everything raised on purpose by this package derives from
:class:`BkernError`, so callers can catch one base class. Input
validation failures also derive from ``ValueError`` to play well with
generic argument checking.
"""


class BkernError(Exception):
    """Base class for all errors raised by this package."""


class InputError(BkernError, ValueError):
    """Invalid argument value, shape, or combination."""


class RangeError(InputError):
    """Argument outside its documented range."""


class DomainError(InputError):
    """A point is not in the set the operation requires."""


class AccuracyError(BkernError):
    """Quadrature could not reach the requested tolerance.

    Attributes
    ----------
    value : float or ndarray or None
        Best partial value available when the error was raised.
    err : float or ndarray or None
        Error estimate attached to ``value``.
    """

    def __init__(self, message, value=None, err=None):
        super().__init__(message)
        self.value = value
        self.err = err


class ModelError(BkernError):
    """Parameter combination outside the model's validity region."""


class UnsupportedError(BkernError):
    """Requested combination is out of scope for this implementation."""


class ConfigError(BkernError):
    """Malformed or inconsistent run configuration."""


class SamplerError(BkernError):
    """A rejection sampler stalled or exceeded its retry budget.

    Attributes
    ----------
    diagnostics : dict
        Acceptance counters and the offending parameters.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
