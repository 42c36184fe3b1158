"""Exception hierarchy shared by all modules."""


class HMFlowError(Exception):
    """Base class for every error raised by the package."""


class DegenerateCritical(HMFlowError):
    """A critical level of g² has vanishing second derivative."""


class NotAnEquator(HMFlowError):
    """The requested level is not a local maximum of g²."""


class NoFlankingMinima(HMFlowError):
    """An equator lacks neighbouring minima of g² on one side."""


class NonMinimalBase(HMFlowError):
    """The base level has G'(s0) <= 0, so no regular seed exists."""


class SeriesDivergence(HMFlowError):
    """The series seed correction is too large at the switch radius."""


class StepFailure(HMFlowError):
    """The adaptive integrator could not meet its tolerance."""


class BlowUp(HMFlowError):
    """The solution left the coordinate domain of the target."""


class Unbounded(HMFlowError):
    """A limit was requested for an unbounded trajectory."""


class TangencySuspected(HMFlowError):
    """A zero was found where the function and its derivative both vanish."""


class NoBracket(HMFlowError):
    """Bisection endpoints do not straddle the target."""


class NonMonotoneBracket(HMFlowError):
    """Bisection converged onto a jump of the crossing count."""


class JumpNotFound(HMFlowError):
    """The sweep never exceeds the requested crossing count."""


class CriterionNotMet(HMFlowError):
    """The equator does not satisfy the precondition of the request."""


class DegenerateMode(HMFlowError):
    """The requested mode vanishes identically."""


class DivergentQuadrature(HMFlowError):
    """The integrand fails the near-origin integrability test."""


class NonConvergence(HMFlowError):
    """An iterative solver stopped before reaching its tolerance."""


class StepRejected(HMFlowError):
    """An implicit time step failed to converge."""


class SchemaError(HMFlowError):
    """Invalid configuration document.

    Parameters
    ----------
    path : str
        JSON pointer of the offending entry.
    reason : str
        Short machine-readable reason.
    """

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason
