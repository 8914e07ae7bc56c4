"""Error taxonomy for the exporter."""


class ExporterError(Exception):
    """Base class for all expected exporter failures."""


class ManifestError(ExporterError):
    """The manifest file is missing or malformed."""


class ModelLoadFailure(ExporterError):
    """The requested embedding provider cannot be resolved or loaded."""


class ProviderOutputError(ExporterError):
    """A provider returned vectors violating the 192-D finite contract."""


class AudioReadFailure(ExporterError):
    """One clip's audio could not be read as 16 kHz mono PCM WAV."""
