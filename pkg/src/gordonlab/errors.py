"""Exception hierarchy shared by all gordonlab modules."""


class GordonLabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(GordonLabError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class RangeError(GordonLabError, IndexError):
    """Requested more convergents / orders than are available."""


class ResourceBudgetError(GordonLabError):
    """A big-integer or work budget would be exceeded.

    ``order`` names the offending approximation order when known.
    """

    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class SingularityHit(GordonLabError, ArithmeticError):
    """Evaluation landed exactly on the singular lattice of a power singularity."""

    def __init__(self, x):
        super().__init__(f"power singularity hit at x = {x}")
        self.x = x


class StepSizeUnderflow(GordonLabError, ArithmeticError):
    """The adaptive integrator could not meet its tolerance near ``position``."""

    def __init__(self, position):
        super().__init__(f"step size underflow near x = {position!r}")
        self.position = position


class NumericalBlowup(GordonLabError, ArithmeticError):
    """The solution became non-finite; ``last_good_x`` is the last finite position."""

    def __init__(self, last_good_x):
        super().__init__(f"non-finite solution state after x = {last_good_x!r}")
        self.last_good_x = last_good_x


class InvariantViolation(GordonLabError, AssertionError):
    """A guaranteed inequality or identity failed on concrete inputs."""

    def __init__(self, invariant, details=""):
        msg = f"invariant violated: {invariant}"
        if details:
            msg += f" ({details})"
        super().__init__(msg)
        self.invariant = invariant
        self.details = details


class DSLSyntaxError(GordonLabError, ValueError):
    """Potential DSL parse error with 1-based line/column and expected token."""

    def __init__(self, message, text, pos, expected=None):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        full = f"{message} at line {line}, column {col}"
        if expected:
            full += f" (expected {expected})"
        super().__init__(full)
        self.line = line
        self.column = col
        self.expected = expected
