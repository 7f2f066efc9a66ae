"""Exception types raised across the package."""


class CollapseLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(CollapseLabError, ValueError):
    pass


class ZeroNormError(CollapseLabError, ValueError):
    pass


class BadWeightsError(CollapseLabError, ValueError):
    pass


class NonOrthonormalBasisError(CollapseLabError, ValueError):
    pass


class NonUnitaryError(CollapseLabError, ValueError):
    pass


class NotHermitianError(CollapseLabError, ValueError):
    pass


class InvalidDensityError(CollapseLabError, ValueError):
    pass


class ConvergenceError(CollapseLabError, RuntimeError):
    pass


class BadParameterError(CollapseLabError, ValueError):
    pass


class FactorizationError(CollapseLabError, RuntimeError):
    """Covariance could not be Cholesky-factorized even after jitter."""


class StepTooLargeError(CollapseLabError, RuntimeError):
    """Fixed-step integrator lost trace (or norm) beyond tolerance."""


class DegenerateExpectedError(CollapseLabError, ValueError):
    pass


class TrajectoryError(CollapseLabError, RuntimeError):
    """An engine error raised inside an ensemble, tagged with the trajectory index."""

    def __init__(self, index, cause):
        super().__init__(f"trajectory {index}: {cause}")
        self.index = index
        self.cause = cause
