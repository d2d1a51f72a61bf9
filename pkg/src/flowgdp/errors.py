"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (bad or insufficient input,
CLI exit code 1) and :class:`NumericalError` (a solver or decomposition could
not produce an answer, CLI exit code 2).
"""
from __future__ import annotations


class FlowGdpError(Exception):
    exit_code = 1


class DataError(FlowGdpError):
    exit_code = 1


class NumericalError(FlowGdpError):
    exit_code = 2


# --- input / data problems -------------------------------------------------


class SchemaError(DataError):
    """CSV header does not match the expected columns."""


class ParseError(DataError):
    def __init__(self, path, row: int, column: str, message: str):
        self.path = str(path)
        self.row = row
        self.column = column
        super().__init__(f"{self.path}: row {row}, column {column!r}: {message}")


class ValidationError(DataError):
    def __init__(self, report):
        self.report = report
        lines = "; ".join(str(v) for v in report.violations[:10])
        more = "" if len(report.violations) <= 10 else f" (+{len(report.violations) - 10} more)"
        super().__init__(f"dataset failed validation: {lines}{more}")


class NoSuchYear(DataError):
    pass


class DomainError(DataError):
    """Input outside the mathematical domain of the operation."""


class NonPositiveResponse(DomainError):
    pass


class InsufficientData(DataError):
    pass


class InsufficientVariation(DataError):
    pass


class ZeroVariance(DataError):
    pass


class ZeroVariancePredictor(ZeroVariance):
    pass


class ZeroVarianceColumn(ZeroVariance):
    pass


class UndefinedCorrelation(ZeroVariance):
    pass


class UnreachableNode(DataError):
    def __init__(self, node, components):
        self.node = node
        self.components = components
        super().__init__(
            f"node {node!r} cannot reach every other node; components: {components}"
        )


# --- numerical failures ----------------------------------------------------


class SingularDesign(NumericalError):
    def __init__(self, message: str, dependent_columns=()):
        self.dependent_columns = list(dependent_columns)
        if self.dependent_columns:
            message = f"{message} (dependent columns: {', '.join(self.dependent_columns)})"
        super().__init__(message)


class Unconverged(NumericalError):
    def __init__(self, message: str, iterations: int, trace=None):
        self.iterations = iterations
        self.trace = list(trace) if trace is not None else []
        super().__init__(f"{message} after {iterations} iterations")


class LpFailure(NumericalError):
    def __init__(self, status: str, message: str = ""):
        self.status = status
        super().__init__(message or f"linear program returned status {status}")
