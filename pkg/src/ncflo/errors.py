"""Exception types shared across the package."""


class NcfloError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(NcfloError, ValueError):
    pass


class InvalidToleranceError(NcfloError, ValueError):
    pass


class InvalidConfigError(NcfloError, ValueError):
    pass


class CapacityError(NcfloError):
    """Raised when a request exceeds a configured resource cap.

    The message always names the cap that was hit so callers can raise it
    deliberately.
    """


class PauliExclusionError(NcfloError, ValueError):
    """A fermionic mode list contains a repeated mode."""


class PostSelectionError(NcfloError, RuntimeError):
    """Post-selection did not succeed within the attempt budget."""


class DegenerateBranchError(NcfloError, ValueError):
    """All branch amplitudes vanish; no conditional distribution exists."""


class SamplerDegeneracyError(NcfloError, RuntimeError):
    """Conditional probabilities of the mode sampler lost normalization.

    Carries the measured defect in ``defect``.
    """

    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect


class NormalizationError(NcfloError, ValueError):
    """An input vector or distribution is not normalized."""
