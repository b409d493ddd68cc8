"""Exception types shared across the package.

Each class carries a ``category`` that the CLI maps to an exit code.
"""


class AsmGueError(Exception):
    category = "data"


class InvalidAsm(AsmGueError, ValueError):
    """Matrix violates an ASM rule; ``kind`` is RowSum, ColSum, Alternation or Shape."""

    def __init__(self, kind, index, message):
        self.kind = kind
        self.index = index
        super().__init__(f"{kind} violation at index {index}: {message}")


class InvalidTriangle(AsmGueError, ValueError):
    pass


class TopRowNotFull(InvalidTriangle):
    pass


class BoundaryMismatch(AsmGueError, ValueError):
    pass


class StepViolation(AsmGueError, ValueError):
    pass


class SizeTooLarge(AsmGueError, ValueError):
    pass


class PreconditionViolated(AsmGueError, ValueError):
    pass


class InternalMismatch(AsmGueError, AssertionError):
    category = "internal"


class BudgetExceeded(AsmGueError, RuntimeError):
    category = "budget"


class ConvergenceFailure(AsmGueError, RuntimeError):
    category = "budget"


class TooFewSamples(AsmGueError, ValueError):
    pass


class ExpectedTooSmall(AsmGueError, ValueError):
    pass


class ConfigError(AsmGueError, ValueError):
    category = "usage"
