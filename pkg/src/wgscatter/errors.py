"""Exception hierarchy shared by the numerical modules and the CLI."""


class ScatteringError(Exception):
    """Base class for all errors raised by wgscatter."""


class DomainError(ScatteringError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class GrazingModeError(DomainError):
    """A mode with zero longitudinal wavenumber where its inverse is required."""


class ExceptionalPointError(DomainError):
    """A diagonalising construction was requested at an exceptional point."""


class InternalResonanceError(ScatteringError, ArithmeticError):
    """A truncated operator that has to be inverted is singular."""


class TruncationError(ScatteringError, ArithmeticError):
    """A mode sum did not converge within the allowed number of modes."""

    def __init__(self, message, n_used=None, tail_estimate=None):
        super().__init__(message)
        self.n_used = n_used
        self.tail_estimate = tail_estimate


class QuadratureError(ScatteringError, ArithmeticError):
    """An adaptive quadrature failed to meet its tolerance."""

    def __init__(self, message, panels=None):
        super().__init__(message)
        self.panels = panels or []


class ConfigError(ScatteringError, ValueError):
    """Invalid run configuration."""

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
