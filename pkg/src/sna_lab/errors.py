"""Exception types raised across the package."""

from __future__ import annotations


class SnaLabError(Exception):
    """Base class for all package errors."""


class DomainError(SnaLabError, ValueError):
    """A fiber coordinate lies outside the phase interval of the map."""


class InverseDomainError(SnaLabError, ValueError):
    """A backward step left the region where the fiber inverse exists.

    ``step`` is the 1-based backward step at which the failure happened and
    ``index`` the first offending position when a whole array was inverted.
    """

    def __init__(self, message: str, step: int | None = None, index: int | None = None):
        super().__init__(message)
        self.step = step
        self.index = index

    def with_context(self, step: int | None = None, index: int | None = None) -> "InverseDomainError":
        return InverseDomainError(
            str(self),
            step=self.step if step is None else step,
            index=self.index if index is None else index,
        )


class MismatchError(SnaLabError, ValueError):
    """Two curve samples that must match (grid, iterate, parameters) do not."""


class DegenerateMaskError(SnaLabError, ValueError):
    """A mask retains fewer than two grid points."""


class BudgetInconclusive(SnaLabError):
    """Bisection bracket is limited by the iteration budget.

    Carries the bracket achieved so far in ``bracket``.
    """

    def __init__(self, message: str, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class EmptyRegion(SnaLabError):
    """A critical region turned out empty (reported, not fatal)."""

    def __init__(self, message: str, level: int | None = None):
        super().__init__(message)
        self.level = level


class DivergentSeries(SnaLabError, ArithmeticError):
    """The contraction exponent of the Lipschitz bound series is not negative."""


class InsufficientScales(SnaLabError, ValueError):
    """Fewer scales than a regression needs survived trimming."""


class ConfigError(SnaLabError, ValueError):
    """A run configuration failed validation."""
