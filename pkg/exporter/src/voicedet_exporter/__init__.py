"""Batch exporter producing voicedet's embedding exchange format.

Runs an embedding provider over every clip in a dataset manifest and
writes ``#dim=192`` TSV files that the detection toolkit ingests. The
hand-off is purely file-based: this package reads the manifest TSV and
the WAV files itself and never imports the detector.
"""

from .errors import (
    AudioReadFailure,
    ExporterError,
    ManifestError,
    ModelLoadFailure,
    ProviderOutputError,
)
from .export import EMBEDDING_DIM, ExportJob, ExportResult, export_embeddings
from .provider import BUILTIN_MODEL, load_provider, melstats_v1

__all__ = [
    "AudioReadFailure",
    "BUILTIN_MODEL",
    "EMBEDDING_DIM",
    "ExportJob",
    "ExportResult",
    "ExporterError",
    "ManifestError",
    "ModelLoadFailure",
    "ProviderOutputError",
    "export_embeddings",
    "load_provider",
    "melstats_v1",
]
