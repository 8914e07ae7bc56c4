"""On-disk feature store: one line-oriented text file per feature family.

Layout::

    #features-v1 family=<tag> dim=<d> schema_hash=<hex>
    <clip_id>\tv1,v2,...,vd

Floats are written with ``repr`` so a write/read round trip is exact.
The schema hash pins the column meaning; loading against a different
schema raises instead of silently misaligning features.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateClip,
    ManifestFormatError,
    NonFiniteValue,
    SchemaMismatch,
)

_STORE_MAGIC = "#features-v1"

FAMILY_PERCEPTUAL = "perceptual"
FAMILY_SPECTRAL = "spectral"
FAMILY_LEARNED = "learned"
FEATURE_FAMILIES = (FAMILY_PERCEPTUAL, FAMILY_SPECTRAL, FAMILY_LEARNED)


@dataclass(frozen=True)
class FeatureVector:
    """One clip's feature vector tagged with its family."""

    clip_id: str
    family: str
    values: np.ndarray


def schema_hash(schema: Sequence[str]) -> str:
    """Hash of the ordered column names."""
    h = hashlib.sha256()
    for name in schema:
        h.update(name.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def write_feature_store(
    path: str | Path,
    family: str,
    schema: Sequence[str],
    rows: Iterable[tuple[str, np.ndarray]],
) -> None:
    """Write rows in the given order (callers pass manifest order)."""
    dim = len(schema)
    lines = [f"{_STORE_MAGIC} family={family} dim={dim} schema_hash={schema_hash(schema)}"]
    seen: set[str] = set()
    for clip_id, values in rows:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (dim,):
            raise DimensionMismatch(
                f"clip {clip_id!r}: expected {dim} values, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue(f"clip {clip_id!r} has non-finite feature values")
        if clip_id in seen:
            raise DuplicateClip(f"clip {clip_id!r} written twice")
        seen.add(clip_id)
        lines.append(clip_id + "\t" + ",".join(repr(float(v)) for v in values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class FeatureStore:
    """Parsed feature store: ordered rows plus an id-keyed view."""

    family: str
    dim: int
    schema_hash: str
    rows: tuple[tuple[str, np.ndarray], ...]

    def matrix(self, clip_ids: Sequence[str]) -> np.ndarray:
        """Stack the named clips' vectors in the order given."""
        by_id = dict(self.rows)
        missing = [cid for cid in clip_ids if cid not in by_id]
        if missing:
            raise KeyError(f"feature store lacks clips: {missing[:5]}")
        return np.vstack([by_id[cid] for cid in clip_ids])


def read_feature_store(
    path: str | Path,
    expected_family: str | None = None,
    expected_schema: Sequence[str] | None = None,
) -> FeatureStore:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestFormatError(f"cannot read feature store {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_STORE_MAGIC + " "):
        raise ManifestFormatError(f"{path}: missing feature store header")
    header = dict(part.split("=", 1) for part in lines[0].split()[1:])
    try:
        family = header["family"]
        dim = int(header["dim"])
        digest = header["schema_hash"]
    except (KeyError, ValueError) as exc:
        raise ManifestFormatError(f"{path}: bad feature store header") from exc
    if expected_family is not None and family != expected_family:
        raise SchemaMismatch(f"{path}: family {family!r}, expected {expected_family!r}")
    if expected_schema is not None and schema_hash(expected_schema) != digest:
        raise SchemaMismatch(f"{path}: schema hash does not match the expected schema")

    rows: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        clip_id, _, payload = ln.partition("\t")
        if not payload:
            raise ManifestFormatError(f"{path}:{lineno}: expected <id>\\t<values>")
        values = np.array([float(v) for v in payload.split(",")], dtype=np.float64)
        if values.shape != (dim,):
            raise DimensionMismatch(
                f"{path}:{lineno}: expected {dim} values, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue(f"{path}:{lineno}: non-finite feature value")
        if clip_id in seen:
            raise DuplicateClip(f"{path}:{lineno}: duplicate clip {clip_id!r}")
        seen.add(clip_id)
        rows.append((clip_id, values))
    return FeatureStore(family, dim, digest, tuple(rows))
