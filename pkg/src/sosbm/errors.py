"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SosBmError(Exception):
    """Base class for all errors raised by the package."""


class NonPositiveTimeError(SosBmError, ValueError):
    """A time horizon or step was zero or negative."""


class ParameterError(SosBmError, ValueError):
    """A parameter violated its domain invariants."""


class ReflectionUnsupportedError(ParameterError):
    """|beta| = 1 was passed to an operation defined only for |beta| < 1."""


class BracketError(SosBmError, ValueError):
    """The root-finding bracket does not straddle a sign change."""


class QuadratureError(SosBmError, ArithmeticError):
    """Adaptive quadrature exhausted its subdivision budget."""


class ZeroStickinessError(SosBmError, ValueError):
    """The occupation-based local time needs rho > 0."""


class ZeroNormalizerError(SosBmError, ZeroDivisionError):
    """A one-sided integral of the test function vanished."""


class NegativeStartError(SosBmError, ValueError):
    """A reflected process was started below zero."""


class NonEllipticError(SosBmError, ValueError):
    """A volatility function was not bounded away from zero."""


class NonInvertibleError(SosBmError, ValueError):
    """A space transform had a non-positive one-sided derivative."""


class ConfigError(SosBmError, ValueError):
    """An experiment configuration was malformed."""


class SchemaError(SosBmError, ValueError):
    """A CSV input did not follow the expected layout."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
