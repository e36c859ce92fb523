from typing import Any, Dict, Optional


class EpAdaptiveError(Exception):
    """
    Base for every error raised by ep_adaptive
    """


class DomainError(EpAdaptiveError, ValueError):
    pass


class KurtosisRangeError(DomainError):
    pass


class DegenerateInputError(EpAdaptiveError, ValueError):
    pass


class NotIdentifiableError(EpAdaptiveError, ValueError):
    pass


class DataParseError(EpAdaptiveError, ValueError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f'row {row}')
        if column is not None:
            location.append(f'column {column!r}')
        if location:
            message = f'{message} ({", ".join(location)})'
        super().__init__(message)
        self.row = row
        self.column = column


class OptimizationError(EpAdaptiveError, RuntimeError):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __str__(self):
        if not self.diagnostics:
            return super().__str__()
        details = ', '.join(f'{k}={v!r}' for k, v in self.diagnostics.items())
        return f'{super().__str__()} [{details}]'


class NumericalError(EpAdaptiveError, ArithmeticError):
    def __init__(self, message: str, state: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.state = dict(state or {})


class InvariantViolation(EpAdaptiveError, RuntimeError):
    pass


class BoundaryVarianceError(EpAdaptiveError):
    """
    Variance components estimated on the boundary of the parameter space
    """

    def __init__(self, message: str, estimates=None):
        super().__init__(message)
        self.estimates = estimates
