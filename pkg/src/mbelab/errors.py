"""Exception hierarchy shared by every module."""


class MBLabError(Exception):
    """Base class for all library errors."""


class InvalidParameters(MBLabError, ValueError):
    """A model or pumping invariant does not hold."""


class BallViolation(MBLabError, ValueError):
    """A Bloch vector lies outside the unit ball."""


class NotDensityMatrix(MBLabError, ValueError):
    """A matrix is not Hermitian with unit trace."""


class NormViolation(MBLabError, ValueError):
    """Schroedinger amplitudes are not normalised."""


class HorizonTooShort(MBLabError, ValueError):
    """Averaging horizon is below the configured minimum."""


class ResonanceMismatch(MBLabError, ValueError):
    """Requested averaged field does not match the frequency configuration."""


class PumpResonantWithMolecule(MBLabError, ValueError):
    """An off-resonant pump mode coincides with the molecular frequency."""


class NotResonant(ResonanceMismatch):
    """Operation requires Omega == omega."""


class BranchEmpty(MBLabError):
    """The requested harmonic branch has no points (c*r <= |Ae|)."""


class OutOfRange(MBLabError, ValueError):
    """Branch parameter outside its admissible interval."""


class NoConvergence(MBLabError, ArithmeticError):
    """Eigenvalue iteration failed to converge."""


class IntegrationError(MBLabError, RuntimeError):
    """Base class for integrator failures; ``t`` is the failure time."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StepSizeUnderflow(IntegrationError):
    pass


class DriftBudgetExceeded(IntegrationError):
    pass


class TooManySteps(IntegrationError):
    pass
