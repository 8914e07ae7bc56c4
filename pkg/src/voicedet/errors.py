"""Exception hierarchy shared across the toolkit.

Every error raised on purpose by this package derives from
:class:`VoicedetError`, so callers (and the command-line driver) can
distinguish validation failures from genuine bugs.
"""


class VoicedetError(Exception):
    """Base class for all errors raised by this package."""


# --- audio container / signal handling ---------------------------------


class MalformedContainer(VoicedetError):
    """WAV byte stream has a bad header, bad chunk layout or is truncated."""


class UnsupportedEncoding(VoicedetError):
    """WAV format tag or bit depth outside the supported PCM/float set."""


class EmptyClip(VoicedetError):
    """Operation requires at least one sample."""


class ClipTooShort(VoicedetError):
    """Clip is shorter than the analysis window that was requested."""


class DegenerateSilence(VoicedetError):
    """Clip is all zeros and cannot be featurized."""


# --- perceptual features ------------------------------------------------


class SegmentOutOfRange(VoicedetError):
    """Pause segment list is not sorted/disjoint or exceeds the clip."""


class InvalidCutoff(VoicedetError):
    """Smoothing cutoff must sit strictly inside (0, sample_rate / 2)."""


class EmptyEnvelope(VoicedetError):
    """Amplitude summary requires a non-empty envelope."""


class InsufficientData(VoicedetError):
    """Statistical test requires at least two observations per group."""


class ZeroVariance(VoicedetError):
    """Both groups are constant with different means; t is undefined."""


# --- spectral features --------------------------------------------------


class TooFewFrames(VoicedetError):
    """Functional summaries need at least two analysis frames."""


class SingularAutocorrelation(VoicedetError):
    """Autocorrelation matrix is singular (typically an all-zero clip)."""


class DegenerateLabels(VoicedetError):
    """Feature selection needs at least two distinct labels."""


# --- learned embeddings -------------------------------------------------


class DimensionMismatch(VoicedetError):
    """Vector length differs from the declared dimensionality."""


class NonFiniteValue(VoicedetError):
    """NaN or infinity found where a finite number is required."""


class DuplicateClip(VoicedetError):
    """The same clip identifier appears more than once."""


class MissingClip(VoicedetError):
    """A clip listed in the manifest has no corresponding record."""


# --- dataset manifest ---------------------------------------------------


class EmptyDirectory(VoicedetError):
    """An audio root contains no WAV files."""


class DuplicateClipId(VoicedetError):
    """Two files map onto the same clip identifier."""


class InsufficientClips(VoicedetError):
    """An architecture has fewer clips than the balancing target."""


class StratumTooSmall(VoicedetError):
    """A label/architecture stratum has too few clips to split."""


class SplitAlreadyAssigned(VoicedetError):
    """Manifest already carries split assignments; pass force to redo."""


class NoPairedUtterances(VoicedetError):
    """Paired balancing found no utterance with both real and synthetic."""


class ManifestFormatError(VoicedetError):
    """Manifest file violates the documented TSV layout."""


# --- laundering ---------------------------------------------------------


class SplitMissing(VoicedetError):
    """Laundering assignment requires every entry to carry a split."""


class ZeroPowerSignal(VoicedetError):
    """Cannot scale noise against a signal with zero power."""


class EncoderUnavailable(VoicedetError):
    """No external codec is configured for transcoding."""


class EncoderFailed(VoicedetError):
    """The external codec exited with an error or produced unusable audio."""


# --- classifiers / evaluation ------------------------------------------


class NonFiniteFeature(VoicedetError):
    """Feature matrix contains NaN or infinity."""


class SingleClassData(VoicedetError):
    """Training data must contain at least two classes."""


class SingleClassLabels(VoicedetError):
    """ROC analysis requires both real and synthetic examples."""


class LengthMismatch(VoicedetError):
    """Parallel arrays disagree in length."""


class ModelFormatError(VoicedetError):
    """Model file violates the documented layout or fails its checksum."""


class TuningFailed(VoicedetError):
    """Every hyperparameter grid point failed to train."""


class SchemaMismatch(VoicedetError):
    """Feature store schema hash does not match the expected schema."""


class ConfigError(VoicedetError):
    """Run configuration file is malformed or inconsistent."""
