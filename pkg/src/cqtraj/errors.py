"""Exception types raised by the trajectory and density code."""

from __future__ import annotations


class CqtrajError(Exception):
    """Base class for all package errors."""


class PoleProximity(CqtrajError):
    """Evaluation requested inside the guard zone around a node of psi.

    When raised by the integrator, ``partial`` holds the trajectory
    accumulated up to the failing step.
    """

    def __init__(self, message: str, point: complex | None = None, partial=None):
        super().__init__(message)
        self.point = point
        self.partial = partial


class RootFindingFailure(CqtrajError):
    pass


class DegenerateStart(CqtrajError):
    """The start point is a stagnation point of the velocity field."""


class BudgetExceeded(CqtrajError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class NodeSingularity(CqtrajError):
    """Line-integral Born density requested exactly at a node."""


class StencilCrossesBoundary(CqtrajError):
    pass


class ToleranceNotMet(CqtrajError):
    pass
