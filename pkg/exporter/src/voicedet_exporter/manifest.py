"""Minimal reader for the detector's dataset-manifest exchange format.

A manifest is UTF-8 text: a ``#manifest-v1 ...`` header line, then one
clip per line as tab-separated columns whose first two are the clip id
and the audio path. Later columns (labels, splits, laundering) do not
concern the exporter and are ignored.
"""

from pathlib import Path

from .errors import ManifestError

MANIFEST_MAGIC = "#manifest-v1"


def read_manifest_clips(path: str | Path) -> list[tuple[str, str]]:
    """Return ``(clip_id, audio_path)`` pairs in manifest order."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not lines or not lines[0].startswith(MANIFEST_MAGIC + " "):
        raise ManifestError(f"{path}: first line must start with '{MANIFEST_MAGIC} '")

    clips: list[tuple[str, str]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 2 or not cols[0] or not cols[1]:
            raise ManifestError(f"{path}:{lineno}: need clip_id<TAB>path columns")
        clip_id = cols[0]
        if clip_id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate clip id {clip_id!r}")
        seen.add(clip_id)
        clips.append((clip_id, cols[1]))
    if not clips:
        raise ManifestError(f"{path}: manifest lists no clips")
    return clips
