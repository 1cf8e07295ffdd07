"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) that the command line
front end reports in its JSON diagnostics.
"""


class CplabError(Exception):
    """Base class for all library errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidInput(CplabError, ValueError):
    pass


class DimensionMismatch(InvalidInput):
    pass


class NonFiniteInput(InvalidInput):
    pass


class InvalidState(InvalidInput):
    pass


class InvalidParams(InvalidInput):
    pass


class NumericalError(CplabError, ArithmeticError):
    """Failures of a numerical method on otherwise valid input."""


class EigenvalueCollision(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class SingularOperator(NumericalError):
    pass


class SingularSpectralPoint(NumericalError):
    pass


class StepFailure(NumericalError):
    pass


class ForbiddenTimePath(InvalidInput):
    pass


class ForbiddenTime(InvalidInput):
    pass


class EmptyTrajectory(InvalidInput):
    pass


class ParticleCollision(NumericalError):
    pass


class OffOrbit(InvalidInput):
    pass


class DegenerateScaling(NumericalError):
    pass


class GridMismatch(InvalidInput):
    pass


class LatticePoint(InvalidInput):
    pass


class BranchDomain(InvalidInput):
    pass


class RootSearchFailure(NumericalError):
    pass


class SingularQ(NumericalError):
    pass
