"""Exception hierarchy. Every error carries a stable ``code`` string."""


class GomtError(Exception):
    code = "GOMT_ERROR"


class SortMismatch(GomtError):
    code = "SORT_MISMATCH"


class ArityMismatch(GomtError):
    code = "ARITY_MISMATCH"


class UnsupportedSort(GomtError):
    code = "UNSUPPORTED_SORT"


class ExtraFreeVars(GomtError):
    code = "EXTRA_FREE_VARS"


class UnrepresentableValue(GomtError):
    code = "UNREPRESENTABLE_VALUE"


class UndeclaredSymbol(GomtError):
    code = "UNDECLARED_SYMBOL"


class ParseError(GomtError):
    code = "PARSE_ERROR"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class SemanticError(GomtError):
    code = "SEMANTIC_ERROR"


class SolverCrash(GomtError):
    code = "SOLVER_CRASH"


class ProtocolError(GomtError):
    code = "PROTOCOL_ERROR"


class SolverUnknown(GomtError):
    """The backend answered ``unknown`` (timeout or incompleteness)."""

    code = "UNKNOWN"

    def __init__(self, reason="unknown"):
        self.reason = reason
        super().__init__(f"solver returned unknown: {reason}")


class UnsupportedObjective(GomtError):
    code = "UNSUPPORTED_OBJECTIVE"


class Unbounded(GomtError):
    code = "UNBOUNDED"


class UnsoundSplit(GomtError):
    code = "UNSOUND_SPLIT"


class UnsoundCut(GomtError):
    code = "UNSOUND_CUT"


class EmptyTau(GomtError):
    code = "EMPTY_TAU"


class CapExceeded(GomtError):
    code = "CAP_EXCEEDED"


class IncompleteAssignment(GomtError):
    code = "INCOMPLETE_ASSIGNMENT"
