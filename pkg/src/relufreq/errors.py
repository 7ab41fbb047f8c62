"""Exception types shared across the package."""


class ReluFreqError(Exception):
    """Base class for all relufreq errors."""


class AliasingError(ReluFreqError):
    """A tone frequency is at or above the Nyquist frequency."""


class EmptyToneError(ReluFreqError):
    """A multi-tone with no components was used where content is required."""


class ZeroReferenceError(ReluFreqError):
    """The reference signal of a relative error metric has zero norm."""


class NonZeroPhaseError(ReluFreqError):
    """A closed-form operation only defined for zero-phase tones got a phase."""


class DegenerateInputError(ReluFreqError):
    """All component amplitudes are zero; the mean power is not positive."""
