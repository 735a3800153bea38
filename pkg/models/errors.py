"""
DirSeg — Error Types
=====================
Exception hierarchy shared by every module. ``InputError`` subclasses map
to CLI exit code 2, ``RuntimeFailure`` subclasses to exit code 1.
"""


class DirSegError(Exception):
    """Base class for all DirSeg errors."""


class InputError(DirSegError):
    """Bad input supplied by the caller (exit code 2)."""


class RuntimeFailure(DirSegError):
    """A computation failed on valid input (exit code 1)."""


# ─── Audio ───────────────────────────────────────────────────────────────────

class UnsupportedFormat(InputError):
    pass


class CorruptHeader(InputError):
    pass


class IoFailure(RuntimeFailure):
    pass


class SampleRateMismatch(InputError):
    pass


class SilentInput(InputError):
    pass


class InvalidSpec(InputError):
    pass


# ─── Spectral ────────────────────────────────────────────────────────────────

class ClipTooShort(InputError):
    pass


class EmptySpectrogram(InputError):
    pass


# ─── Directional statistics ──────────────────────────────────────────────────

class DimensionTooSmall(InputError):
    pass


class NumericalOverflow(RuntimeFailure):
    """Raised when a Bessel evaluation leaves the finite range. Within the
    supported dimension/concentration ranges this indicates a bug."""


class DimensionMismatch(InputError):
    pass


class NotUnitNorm(InputError):
    pass


class DegenerateComponent(RuntimeFailure):
    """The resultant of one or more components vanished in the M-step."""

    def __init__(self, components, message=None):
        self.components = list(components)
        super().__init__(message or f"vanishing resultant for components {self.components}")


class TooFewPoints(InputError):
    pass


class AllDegenerate(RuntimeFailure):
    pass


class KeepOutOfRange(InputError):
    pass


class DictionaryFormatError(InputError):
    pass


class ProvenanceMismatch(UserWarning):
    """Dictionary STFT parameters differ from the recording's parameters."""


# ─── Labeling / classification ───────────────────────────────────────────────

class NotADistribution(InputError):
    pass


class LengthMismatch(InputError):
    pass


class TooFewColumns(InputError):
    pass


class BudgetTooLarge(InputError):
    pass


class DegenerateCurve(RuntimeFailure):
    """MI curve has no contrast; auto-labeling cannot separate classes."""


class SingleClassInput(InputError):
    pass


class SvmConvergenceWarning(UserWarning):
    """SMO stopped at its iteration cap before meeting the KKT tolerance."""


# ─── Pipeline / evaluation / CLI ─────────────────────────────────────────────

class EvenMedianLength(InputError):
    pass


class MalformedRow(InputError):
    def __init__(self, line_number, detail):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {detail}")


class NegativeDuration(InputError):
    pass


class NoVocalizationFrames(InputError):
    pass


class ConfigError(InputError):
    pass
