"""Exception types shared across the package."""

from __future__ import annotations


class AsisError(Exception):
    """Base class for all package-specific errors."""


class GraphParseError(AsisError):
    """Malformed edge-list input; carries the 1-based offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(AsisError):
    """One or more named invariant violations in user-supplied data."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConvergenceError(AsisError):
    """An iterative numerical routine hit its iteration cap."""


class StateSpaceError(AsisError):
    """The joint state space is too large for exact enumeration."""


class SimulationBudgetError(AsisError):
    """Event budget exhausted before the run met its stopping condition.

    ``partial`` holds whatever diagnostics were accumulated up to the point
    the budget ran out.
    """

    def __init__(self, message: str, partial=None):
        self.partial = partial
        super().__init__(message)


class GpInfeasibleError(AsisError):
    """The eradication problem has no feasible rates; names the binding check."""

    def __init__(self, message: str, binding: str | None = None):
        self.binding = binding
        super().__init__(message)


class GpSolverError(AsisError):
    """The interior-point solve failed to converge."""
