"""
Exception hierarchy for the thermodynamic-formalism toolkit.
"""
from typing import Any, Dict, Optional


class ThermoError(Exception):
    """Base class for every error raised by this package."""


class MapDefinitionError(ThermoError, ValueError):
    """A branch table, potential or family parameter set is malformed."""


class ResolutionLimitError(ThermoError, ValueError):
    """Refinement went below the configured tolerance or cylinder budget."""


class BoundaryError(ThermoError, ValueError):
    """A point or an orbit landed on a partition boundary."""

    def __init__(self, message: str, point: Any = None, step: Optional[int] = None):
        super().__init__(message)
        self.point = point
        self.step = step


class ConvergenceError(ThermoError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""


class ComputationRefused(ThermoError, RuntimeError):
    """
    A precondition gate failed. The diagnostic explains which quantity failed
    and by how much, so callers (and the CLI) can surface it verbatim.
    """

    def __init__(self, message: str, diagnostic: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostic = dict(diagnostic or {})

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostic:
            return base
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostic.items())
        return f"{base} ({details})"


class UnrealizableWordError(ThermoError, ValueError):
    """A symbolic word has no path in the (truncated) tower."""
