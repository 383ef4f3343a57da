"""Exception types shared across the package."""


class EllstabError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(EllstabError, ValueError):
    """Invalid argument or configuration value."""


class SingularityError(EllstabError, ValueError):
    """Non-integrable weight at the origin."""


class ExtrapolationError(EllstabError, ValueError):
    """Evaluation outside the range covered by a tabulated function."""


class DataError(EllstabError, ValueError):
    """Not enough usable data for a fit or a diagnostic."""


class DegeneracyError(EllstabError, RuntimeError):
    """A quantity required to be nonvanishing vanishes on the domain."""


class StabilityBoundaryError(EllstabError, RuntimeError):
    """An eigenvalue sits within tolerance of zero; the sign count is unreliable."""


class NonlinearityClassError(EllstabError, RuntimeError):
    """The shooting profile never crosses zero; f is outside the admissible class."""


class StepSizeError(EllstabError, RuntimeError):
    """The initial-value integrator failed to advance (stiff blow-up)."""


class ExistencePreconditionError(EllstabError, RuntimeError):
    """A sub/supersolution pair cannot be constructed for the requested parameters."""


class ContractViolationError(EllstabError, RuntimeError):
    """A monotone iteration produced a non-monotone iterate."""
