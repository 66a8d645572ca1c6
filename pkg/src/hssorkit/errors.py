"""Exception types shared across the workbench."""


class WorkbenchError(Exception):
    """Base class for solver and factorization failures."""


class SingularFactorError(WorkbenchError):
    """A triangular or block factor has a zero (or missing) pivot."""


class FactorBreakdownError(WorkbenchError):
    """Incomplete factorization hit a pivot below the breakdown threshold."""


class NotSpdError(WorkbenchError):
    """An operator assumed symmetric positive definite produced evidence it is not."""


class DivergenceError(WorkbenchError):
    """An iterative solver produced non-finite iterates."""


class MemoryLimitError(WorkbenchError):
    """A setup was refused because its estimated allocation exceeds the guard."""
