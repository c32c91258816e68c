"""Exception hierarchy shared by every module of the package."""


class RevealedLossError(Exception):
    """Base class for all errors raised by revealed_loss."""

    def to_record(self):
        """Machine-readable summary used by the CLI on failure."""
        record = {"error": type(self).__name__, "message": str(self)}
        for key in ("line", "case_id", "field", "context"):
            value = getattr(self, key, None)
            if value is not None:
                record[key] = value
        if getattr(self, "violations", None):
            record["violations"] = self.violations
        return record


class ParameterError(RevealedLossError, ValueError):
    pass


class DimensionError(RevealedLossError, ValueError):
    pass


class EmptyDatasetError(RevealedLossError, ValueError):
    pass


class NumericError(RevealedLossError, ArithmeticError):
    """Non-finite value encountered during optimization."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context


class IncompleteRecordError(RevealedLossError, ValueError):
    def __init__(self, message, case_id=None, field=None):
        super().__init__(message)
        self.case_id = case_id
        self.field = field


class UndefinedDenominatorError(RevealedLossError, ZeroDivisionError):
    """Baseline loss is zero, so a percent reduction is undefined."""


class UndefinedProgressError(RevealedLossError, ValueError):
    """Baseline ratio already equals the target ratio."""


class DegenerateInputError(RevealedLossError, ValueError):
    pass


class _LocatedError(RevealedLossError, ValueError):
    def __init__(self, message, line=None, case_id=None, field=None, violations=None):
        super().__init__(message)
        self.line = line
        self.case_id = case_id
        self.field = field
        self.violations = list(violations or [])


class ParseError(_LocatedError):
    pass


class RangeError(_LocatedError):
    pass


class IntegrityError(_LocatedError):
    pass
