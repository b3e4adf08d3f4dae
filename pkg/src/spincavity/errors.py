"""Exception types shared across the package."""


class SpinCavityError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(SpinCavityError):
    """Operator/state dimensions are incompatible."""


class CutoffTooSmall(SpinCavityError):
    """Fock truncation discards more probability than the tolerance allows."""


class DegenerateMeanSpin(SpinCavityError):
    """Mean spin vector too short to define a transverse plane."""


class ConvergenceFailure(SpinCavityError):
    """Eigensolver failed or produced residuals above tolerance."""

    def __init__(self, message: str, sector: int | None = None):
        super().__init__(message)
        self.sector = sector


class StepTooLarge(SpinCavityError):
    """Finite-difference step failed the Richardson consistency check."""


class GridMismatch(SpinCavityError):
    """Phase-space grids are incompatible for resampling/correlation."""


class ConfigError(SpinCavityError):
    """Invalid run configuration; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
