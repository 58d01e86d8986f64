"""Exception types shared across the package."""


class FracwaveError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(FracwaveError):
    """One or more input constraints violated.

    Carries ``issues``, a list of ``(field_path, message)`` pairs so a caller
    can report every violation at once instead of failing on the first.
    """

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [("", issues)]
        self.issues = list(issues)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.issues]
        super().__init__("; ".join(lines))


class NonConvergenceError(FracwaveError):
    """A series evaluation could not certify the requested tolerance."""


class GammaPoleError(FracwaveError):
    """Gamma function evaluated at a non-positive integer."""


class GammaOverflowError(FracwaveError):
    """Gamma function result exceeds double-precision range."""


class DomainError(FracwaveError):
    """Evaluation point lies outside an operator's spatial domain."""


class GridMismatchError(FracwaveError):
    """Sample array does not match the grid it is claimed to live on."""


class ResonanceError(FracwaveError):
    """Mode denominator too small for the regular solution formula.

    The caller should route the mode through the resonant-family solver.
    """


class MissingModeError(FracwaveError):
    """Assembly requested more modes than were supplied."""


class InfeasibleModeError(FracwaveError):
    """Assembly received a resonant mode whose forcing component is nonzero."""
