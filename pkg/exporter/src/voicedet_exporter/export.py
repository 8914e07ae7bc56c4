"""Batch export: manifest in, embedding exchange file out."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AudioReadFailure, ProviderOutputError
from .manifest import read_manifest_clips
from .provider import BUILTIN_MODEL, EMBEDDING_DIM, load_provider
from .wav import SAMPLE_RATE_HZ, read_wav_16k_mono


@dataclass(frozen=True)
class ExportJob:
    """One export request."""

    manifest_path: str
    output_path: str
    model: str = BUILTIN_MODEL
    batch_size: int = 16

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class ExportResult:
    """What happened: written rows plus per-clip failures."""

    output_path: Path
    sidecar_path: Path
    exported: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0


def _format_row(clip_id: str, vector: np.ndarray) -> str:
    return clip_id + "\t" + ",".join(repr(float(v)) for v in vector)


def export_embeddings(job: ExportJob) -> ExportResult:
    """Embed every manifest clip and write the ``#dim=192`` TSV.

    Clips that cannot be read are skipped, listed on the sidecar error
    report (``<output>.errors.txt``), and make the result's exit code
    nonzero; successfully read clips are still embedded and written in
    manifest order. Job-level problems (unreadable manifest, unknown
    model, a provider breaking the 192-D contract) raise instead.
    """
    clips = read_manifest_clips(job.manifest_path)
    provider = load_provider(job.model)
    out_path = Path(job.output_path)
    result = ExportResult(out_path, out_path.with_name(out_path.name + ".errors.txt"))

    readable: list[tuple[str, np.ndarray]] = []
    for clip_id, audio_path in clips:
        try:
            readable.append((clip_id, read_wav_16k_mono(audio_path)))
        except AudioReadFailure as exc:
            result.failures.append((clip_id, str(exc)))

    rows: list[str] = []
    for start in range(0, len(readable), job.batch_size):
        batch = readable[start : start + job.batch_size]
        vectors = np.asarray(provider([samples for _, samples in batch], SAMPLE_RATE_HZ))
        if vectors.shape != (len(batch), EMBEDDING_DIM):
            raise ProviderOutputError(
                f"provider returned shape {vectors.shape}, "
                f"expected ({len(batch)}, {EMBEDDING_DIM})"
            )
        if not np.all(np.isfinite(vectors)):
            raise ProviderOutputError("provider returned non-finite values")
        for (clip_id, _), vector in zip(batch, vectors):
            rows.append(_format_row(clip_id, vector))
            result.exported.append(clip_id)

    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        f"#dim={EMBEDDING_DIM}\n" + "".join(row + "\n" for row in rows),
        encoding="utf-8",
    )
    if result.failures:
        result.sidecar_path.write_text(
            "".join(f"{cid}\t{msg}\n" for cid, msg in result.failures),
            encoding="utf-8",
        )
    elif result.sidecar_path.exists():
        result.sidecar_path.unlink()  # stale report from an earlier run
    return result
