"""Exception types shared across the package."""


class RngCcsError(Exception):
    """Base class for all package errors."""


class InstanceError(RngCcsError):
    """Malformed instance bundle: schema violation, dangling reference, bad distance."""


class RoutingError(RngCcsError):
    pass


class MissingArcError(RngCcsError, KeyError):
    pass


class InfeasibleAssignmentError(RngCcsError):
    """Raised when a raw solver assignment violates a model row beyond tolerance."""

    def __init__(self, row: str, violation: float):
        super().__init__(f"constraint {row!r} violated by {violation:.6g}")
        self.row = row
        self.violation = violation


class SolverError(RngCcsError):
    pass


class NumericalStall(SolverError):
    def __init__(self, message: str, iterations: int, condition: float):
        super().__init__(f"{message} (iterations={iterations}, cond~{condition:.3g})")
        self.iterations = iterations
        self.condition = condition


class NoFeasibleSolution(SolverError):
    pass


class ReportError(RngCcsError):
    pass
