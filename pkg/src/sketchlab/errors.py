"""Exception types shared across the engine."""


class SketchlabError(Exception):
    """Base class for all engine errors."""


class ParseError(SketchlabError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})" if line else message)
        self.line = line
        self.col = col


class EvalError(SketchlabError):
    def __init__(self, message: str, pos: tuple[int, int] | None = None):
        if pos:
            message = f"{message} (line {pos[0]}, col {pos[1]})"
        super().__init__(message)
        self.pos = pos


class SolverError(SketchlabError):
    pass


class NoDegreesOfFreedom(SolverError):
    """Every leaf of the equation is frozen or opaque; nothing may change."""


class Unsolvable(SolverError):
    """The equation is not linear in the chosen constant (or degenerate)."""


class ToolError(SketchlabError):
    """A program transformation refused to run; the program is unchanged."""

    code = "tool_error"


class NotSimple(ToolError):
    code = "not_simple"


class EmptySelection(ToolError):
    code = "empty_selection"


class InvalidSelection(ToolError):
    code = "invalid_selection"


class NothingToLift(ToolError):
    code = "nothing_to_lift"


class NoSolution(ToolError):
    code = "no_solution"


class SolverFailed(ToolError):
    code = "solver_failed"


class UnknownLambda(ToolError):
    code = "unknown_lambda"


class NoBoundsPattern(ToolError):
    code = "no_bounds_pattern"


class NotStructurallyEquivalent(ToolError):
    code = "not_structurally_equivalent"


class UnknownRequest(ToolError):
    code = "unknown_request"
