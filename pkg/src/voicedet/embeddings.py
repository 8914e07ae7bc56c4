"""Learned speaker-embedding exchange format.

Embeddings are produced by an external speaker-verification encoder
(192 dimensions per clip) and handed to this package as a TSV file::

    #dim=192
    <clip_id>\tv1,v2,...,v192

This module validates and loads those files against a manifest; the
embedding vectors are used as-is as the "learned" feature family.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateClip,
    ManifestFormatError,
    MissingClip,
    NonFiniteValue,
)
from .store import FAMILY_LEARNED, FeatureVector

EMBEDDING_DIM = 192

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Embedding:
    """One clip's fixed-length speaker embedding."""

    clip_id: str
    vector: np.ndarray

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.shape != (EMBEDDING_DIM,):
            raise DimensionMismatch(
                f"clip {self.clip_id!r}: embedding must have {EMBEDDING_DIM} values, "
                f"got shape {vec.shape}"
            )
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(f"clip {self.clip_id!r}: embedding has non-finite values")
        vec = vec.copy()
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)


def write_embeddings(path: str | Path, embeddings: Iterable[Embedding]) -> None:
    """Write the exchange file; floats use ``repr`` for exact round trips."""
    lines = [f"#dim={EMBEDDING_DIM}"]
    seen: set[str] = set()
    for emb in embeddings:
        if emb.clip_id in seen:
            raise DuplicateClip(f"embedding for clip {emb.clip_id!r} written twice")
        seen.add(emb.clip_id)
        lines.append(emb.clip_id + "\t" + ",".join(repr(float(v)) for v in emb.vector))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embeddings(
    path: str | Path, manifest_clip_ids: Iterable[str]
) -> dict[str, Embedding]:
    """Load and validate an embedding file against manifest coverage.

    Every manifest clip must have exactly one well-formed row; rows for
    clips outside the manifest are skipped with a logged warning.  Row
    order in the file does not matter.
    """
    wanted = list(manifest_clip_ids)
    wanted_set = set(wanted)
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestFormatError(f"cannot read embeddings {path}: {exc}") from exc

    content = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not content or content[0][1].strip() != f"#dim={EMBEDDING_DIM}":
        raise ManifestFormatError(f"{path}: first line must be '#dim={EMBEDDING_DIM}'")

    found: dict[str, Embedding] = {}
    seen: set[str] = set()
    extras = 0
    for lineno, ln in content[1:]:
        if ln.lstrip().startswith("#"):
            continue
        clip_id, _, payload = ln.partition("\t")
        if not payload:
            raise ManifestFormatError(f"{path}:{lineno}: expected <id>\\t<values>")
        fields = payload.split(",")
        if len(fields) != EMBEDDING_DIM:
            raise DimensionMismatch(
                f"{path}:{lineno}: clip {clip_id!r} has {len(fields)} values, "
                f"expected {EMBEDDING_DIM}"
            )
        try:
            vec = np.array([float(v) for v in fields], dtype=np.float64)
        except ValueError as exc:
            raise ManifestFormatError(f"{path}:{lineno}: unparsable value") from exc
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(f"{path}:{lineno}: clip {clip_id!r} has non-finite values")
        if clip_id in seen:
            raise DuplicateClip(f"{path}:{lineno}: duplicate embedding for {clip_id!r}")
        seen.add(clip_id)
        if clip_id not in wanted_set:
            extras += 1
            continue
        found[clip_id] = Embedding(clip_id, vec)

    if extras:
        logger.warning("%s: skipped %d embeddings for clips outside the manifest", path, extras)
    missing = [cid for cid in wanted if cid not in found]
    if missing:
        raise MissingClip(
            f"{path}: no embedding for {len(missing)} manifest clips "
            f"(first few: {missing[:5]})"
        )
    return found


def embedding_feature_vector(embedding: Embedding) -> FeatureVector:
    """View an embedding as a learned-family feature vector."""
    return FeatureVector(embedding.clip_id, FAMILY_LEARNED, np.array(embedding.vector))


def embedding_schema() -> tuple[str, ...]:
    return tuple(f"emb_{i:03d}" for i in range(EMBEDDING_DIM))


def embedding_matrix(
    embeddings: Mapping[str, Embedding], clip_ids: Iterable[str]
) -> np.ndarray:
    """Stack embeddings for the named clips, in the order given."""
    return np.vstack([embeddings[cid].vector for cid in clip_ids])
