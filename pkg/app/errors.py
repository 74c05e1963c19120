"""Exception hierarchy for graph construction, spectral analysis and search runs."""


class FlipFlopError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidSizeError(FlipFlopError, ValueError):
    """Graph size parameter out of range."""


class UnsupportedSideError(FlipFlopError, ValueError):
    """Hypercubic lattice side too small to keep the degree at 2D."""


class ParityError(FlipFlopError, ValueError):
    """n*d is odd, so no d-regular graph on n vertices exists."""


class GenerationError(FlipFlopError, RuntimeError):
    """Random graph sampler gave up after the restart cap."""


class RegularityError(FlipFlopError, ValueError):
    """Edge list is malformed or not d-regular."""


class ConnectivityError(FlipFlopError, ValueError):
    """Graph or target complement is disconnected where connectivity is required."""


class TooLargeError(FlipFlopError, ValueError):
    """Dense matrix request above the dense cap."""


class SingularDenominatorError(FlipFlopError, ValueError):
    """Eigenphase too close to 0 or pi for the edge-basis lift."""


class PoleError(FlipFlopError, ValueError):
    """Evaluation point sits on a cotangent pole of the walk spectrum."""


class SignError(FlipFlopError, ValueError):
    """Principal vector supplied with non-positive entries."""


class PreconditionError(FlipFlopError, ValueError):
    """Input violates a documented precondition."""


class RunawayWalkError(FlipFlopError, RuntimeError):
    """Monte-Carlo walker never reached the target set."""


class BracketError(FlipFlopError, RuntimeError):
    """Root bracket for the smallest eigenphase does not change sign."""


class VerificationError(FlipFlopError, AssertionError):
    """One or more checks in a verification report failed."""
