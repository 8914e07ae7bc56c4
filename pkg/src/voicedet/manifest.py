"""Dataset manifest: clip inventory, balancing and split assignment.

The manifest is a TSV file with one row per clip::

    #manifest-v1 seed=<int>
    clip_id\tpath\tkind\tarchitecture\tutterance_id\tsplit\tlaundering

``architecture`` is "-" for real clips, ``split`` is "-" until splits
are assigned, and ``laundering`` is "-" until the laundering plan is
drawn ("none" afterwards for clips left clean).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .audio import ClipLabel
from .errors import (
    DuplicateClipId,
    EmptyDirectory,
    InsufficientClips,
    ManifestFormatError,
    NoPairedUtterances,
    SplitAlreadyAssigned,
    StratumTooSmall,
)

SPLIT_TRAIN = "train"
SPLIT_VAL = "val"
SPLIT_TEST = "test"
SPLITS = (SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST)
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)

MIN_STRATUM_SIZE = 5

LAUNDER_NONE = "none"
LAUNDER_NOISE = "noise"
LAUNDER_TRANSCODE = "transcode"
LAUNDER_BOTH = "both"
LAUNDER_KINDS = (LAUNDER_NONE, LAUNDER_NOISE, LAUNDER_TRANSCODE, LAUNDER_BOTH)


@dataclass(frozen=True)
class LaunderingSpec:
    """What post-processing a clip receives before featurization."""

    kind: str
    snr_db: float | None = None
    bitrate_kbps: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in LAUNDER_KINDS:
            raise ValueError(f"unknown laundering kind {self.kind!r}")
        needs_snr = self.kind in (LAUNDER_NOISE, LAUNDER_BOTH)
        needs_rate = self.kind in (LAUNDER_TRANSCODE, LAUNDER_BOTH)
        if needs_snr != (self.snr_db is not None):
            raise ValueError(f"kind {self.kind!r} and snr_db={self.snr_db!r} disagree")
        if needs_rate != (self.bitrate_kbps is not None):
            raise ValueError(
                f"kind {self.kind!r} and bitrate_kbps={self.bitrate_kbps!r} disagree"
            )

    def format(self) -> str:
        if self.kind == LAUNDER_NOISE:
            return f"noise:{self.snr_db!r}"
        if self.kind == LAUNDER_TRANSCODE:
            return f"transcode:{self.bitrate_kbps}"
        if self.kind == LAUNDER_BOTH:
            return f"both:{self.snr_db!r}:{self.bitrate_kbps}"
        return LAUNDER_NONE

    @staticmethod
    def parse(text: str) -> "LaunderingSpec":
        parts = text.split(":")
        try:
            if parts[0] == LAUNDER_NONE and len(parts) == 1:
                return LaunderingSpec(LAUNDER_NONE)
            if parts[0] == LAUNDER_NOISE and len(parts) == 2:
                return LaunderingSpec(LAUNDER_NOISE, snr_db=float(parts[1]))
            if parts[0] == LAUNDER_TRANSCODE and len(parts) == 2:
                return LaunderingSpec(LAUNDER_TRANSCODE, bitrate_kbps=int(parts[1]))
            if parts[0] == LAUNDER_BOTH and len(parts) == 3:
                return LaunderingSpec(
                    LAUNDER_BOTH, snr_db=float(parts[1]), bitrate_kbps=int(parts[2])
                )
        except ValueError as exc:
            raise ManifestFormatError(f"bad laundering value {text!r}") from exc
        raise ManifestFormatError(f"bad laundering value {text!r}")


@dataclass(frozen=True)
class ManifestEntry:
    """One clip's bookkeeping row."""

    clip_id: str
    path: str
    label: ClipLabel
    utterance_id: str
    split: str | None = None
    laundering: LaunderingSpec | None = None

    def __post_init__(self) -> None:
        if self.split is not None and self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        for text_field in (self.clip_id, self.path, self.utterance_id):
            if "\t" in text_field or "\n" in text_field:
                raise ValueError("manifest fields must not contain tabs or newlines")


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered clip inventory plus the seed that drove its randomness."""

    entries: tuple[ManifestEntry, ...]
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        seen: set[str] = set()
        for e in self.entries:
            if e.clip_id in seen:
                raise DuplicateClipId(f"duplicate clip id {e.clip_id!r}")
            seen.add(e.clip_id)

    def clip_ids(self) -> list[str]:
        return [e.clip_id for e in self.entries]

    def by_split(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]


DEFAULT_UTTERANCE_PATTERN = r"^(.*)$"


def _utterance_id(stem: str, pattern: str) -> str:
    m = re.search(pattern, stem)
    if m is None:
        return stem
    return m.group(1) if m.groups() else m.group(0)


def build_manifest(
    roots: Sequence[tuple[str | Path, str, str | None]],
    seed: int = 0,
    utterance_pattern: str = DEFAULT_UTTERANCE_PATTERN,
) -> DatasetManifest:
    """Inventory WAV trees into a manifest.

    ``roots`` holds ``(directory, kind, architecture)`` triples; every
    ``*.wav`` under a root is listed.  Clip ids are the root's name
    joined with the in-root relative path (extension dropped), and
    entries are ordered lexicographically by path so two scans of the
    same tree produce identical manifests.
    """
    records: list[tuple[str, ManifestEntry]] = []
    for root, kind, architecture in roots:
        root = Path(root)
        files = sorted(p for p in root.rglob("*.wav") if p.is_file())
        if not files:
            raise EmptyDirectory(f"no .wav files under {root}")
        label = ClipLabel(kind, architecture)
        for p in files:
            rel = p.relative_to(root).with_suffix("")
            clip_id = "/".join((root.name,) + rel.parts)
            entry = ManifestEntry(
                clip_id=clip_id,
                path=str(p),
                label=label,
                utterance_id=_utterance_id(p.stem, utterance_pattern),
            )
            records.append((str(p), entry))
    records.sort(key=lambda r: r[0])
    return DatasetManifest(tuple(e for _, e in records), seed)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def balance_architectures(
    manifest: DatasetManifest,
    per_architecture: int,
    seed: int | None = None,
    allow_short: bool = False,
) -> DatasetManifest:
    """Subsample each synthetic architecture to the same clip count.

    Architectures are processed in sorted order, drawing without
    replacement from their clip-id-sorted entries; real clips pass
    through untouched.  Architectures below the target raise unless
    ``allow_short`` keeps them whole.  ``seed`` defaults to the
    manifest's own seed.
    """
    if per_architecture < 1:
        raise ValueError("per_architecture must be >= 1")
    by_arch: dict[str, list[ManifestEntry]] = {}
    for e in manifest.entries:
        if e.label.kind == "synthetic":
            by_arch.setdefault(e.label.architecture, []).append(e)

    rng = _rng(manifest.seed if seed is None else seed)
    keep: set[str] = {e.clip_id for e in manifest.entries if e.label.kind == "real"}
    for arch in sorted(by_arch):
        entries = sorted(by_arch[arch], key=lambda e: e.clip_id)
        if len(entries) < per_architecture:
            if not allow_short:
                raise InsufficientClips(
                    f"architecture {arch!r} has {len(entries)} clips, need {per_architecture}"
                )
            keep.update(e.clip_id for e in entries)
            continue
        chosen = rng.choice(len(entries), size=per_architecture, replace=False)
        keep.update(entries[i].clip_id for i in chosen)
    return DatasetManifest(
        tuple(e for e in manifest.entries if e.clip_id in keep), manifest.seed
    )


def balance_paired_utterances(
    manifest: DatasetManifest, seed: int | None = None
) -> DatasetManifest:
    """Keep equal real/synthetic counts within each shared utterance.

    Utterances lacking either side are dropped entirely; within a kept
    utterance the larger side is subsampled (seeded, clip-id order) to
    the smaller side's count.  ``seed`` defaults to the manifest's own
    seed.
    """
    groups: dict[str, list[ManifestEntry]] = {}
    for e in manifest.entries:
        groups.setdefault(e.utterance_id, []).append(e)

    rng = _rng(manifest.seed if seed is None else seed)
    keep: set[str] = set()
    paired = False
    for utt in sorted(groups):
        entries = groups[utt]
        real = sorted(
            (e for e in entries if e.label.kind == "real"), key=lambda e: e.clip_id
        )
        synth = sorted(
            (e for e in entries if e.label.kind == "synthetic"), key=lambda e: e.clip_id
        )
        if not real or not synth:
            continue
        paired = True
        target = min(len(real), len(synth))
        for side in (real, synth):
            if len(side) > target:
                chosen = rng.choice(len(side), size=target, replace=False)
                keep.update(side[i].clip_id for i in chosen)
            else:
                keep.update(e.clip_id for e in side)
    if not paired:
        raise NoPairedUtterances("no utterance has both a real and a synthetic clip")
    return DatasetManifest(
        tuple(e for e in manifest.entries if e.clip_id in keep), manifest.seed
    )


def _largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    """Apportion ``total`` into integer parts matching ``fractions``."""
    ideals = [total * f for f in fractions]
    counts = [int(np.floor(v)) for v in ideals]
    leftovers = total - sum(counts)
    order = sorted(range(len(fractions)), key=lambda i: (-(ideals[i] - counts[i]), i))
    for i in order[:leftovers]:
        counts[i] += 1
    return counts


def _stratum_key(e: ManifestEntry) -> tuple[str, str]:
    return (e.label.kind, e.label.architecture or "")


def split_dataset(
    manifest: DatasetManifest,
    mode: str = "clip",
    force: bool = False,
    allow_small: bool = False,
) -> DatasetManifest:
    """Assign train/val/test at 60/20/20.

    Clip mode stratifies by (kind, architecture): each stratum is
    shuffled (seeded) and cut in order train, val, test.  Per-stratum
    quotas use largest-remainder rounding with a fractional carry
    between same-label strata, which keeps each label's overall
    proportions within one clip of 60/20/20.  Utterance mode assigns
    whole utterance groups so no utterance spans two splits.
    """
    if mode not in ("clip", "utterance"):
        raise ValueError(f"unknown split mode {mode!r}")
    if any(e.split is not None for e in manifest.entries) and not force:
        raise SplitAlreadyAssigned("manifest already has splits; pass force to redo")

    rng = _rng(manifest.seed)
    assignment: dict[str, str] = {}

    if mode == "clip":
        strata: dict[tuple[str, str], list[ManifestEntry]] = {}
        for e in manifest.entries:
            strata.setdefault(_stratum_key(e), []).append(e)
        for key, entries in strata.items():
            if len(entries) < MIN_STRATUM_SIZE and not allow_small:
                raise StratumTooSmall(
                    f"stratum {key} has {len(entries)} clips, need {MIN_STRATUM_SIZE}"
                )
        labels = sorted({k for k, _ in strata})
        for label in labels:
            label_strata = sorted(k for k in strata if k[0] == label)
            carry = [0.0, 0.0, 0.0]
            for key in label_strata:
                entries = sorted(strata[key], key=lambda e: e.clip_id)
                n = len(entries)
                ideals = [n * f + carry[i] for i, f in enumerate(SPLIT_FRACTIONS)]
                counts = [int(np.floor(max(v, 0.0))) for v in ideals]
                leftovers = n - sum(counts)
                order = sorted(
                    range(3), key=lambda i: (-(ideals[i] - counts[i]), i)
                )
                for i in order[:leftovers]:
                    counts[i] += 1
                carry = [ideals[i] - counts[i] for i in range(3)]
                perm = rng.permutation(n)
                shuffled = [entries[i] for i in perm]
                pos = 0
                for split, c in zip(SPLITS, counts):
                    for e in shuffled[pos : pos + c]:
                        assignment[e.clip_id] = split
                    pos += c
    else:
        groups: dict[str, list[ManifestEntry]] = {}
        for e in manifest.entries:
            groups.setdefault(e.utterance_id, []).append(e)
        utterances = sorted(groups)
        if len(utterances) < MIN_STRATUM_SIZE and not allow_small:
            raise StratumTooSmall(
                f"only {len(utterances)} utterances, need {MIN_STRATUM_SIZE}"
            )
        counts = _largest_remainder(len(utterances), SPLIT_FRACTIONS)
        perm = rng.permutation(len(utterances))
        shuffled = [utterances[i] for i in perm]
        pos = 0
        for split, c in zip(SPLITS, counts):
            for utt in shuffled[pos : pos + c]:
                for e in groups[utt]:
                    assignment[e.clip_id] = split
            pos += c

    new_entries = tuple(
        replace(e, split=assignment[e.clip_id]) for e in manifest.entries
    )
    return DatasetManifest(new_entries, manifest.seed)


# --- TSV serialization ----------------------------------------------------

_MANIFEST_MAGIC = "#manifest-v1"


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    lines = [f"{_MANIFEST_MAGIC} seed={manifest.seed}"]
    for e in manifest.entries:
        arch = e.label.architecture if e.label.kind == "synthetic" else "-"
        split = e.split if e.split is not None else "-"
        laundering = e.laundering.format() if e.laundering is not None else "-"
        lines.append(
            "\t".join(
                (e.clip_id, e.path, e.label.kind, arch, e.utterance_id, split, laundering)
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> DatasetManifest:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestFormatError(f"cannot read manifest {path}: {exc}") from exc
    if not lines or not lines[0].startswith(_MANIFEST_MAGIC + " "):
        raise ManifestFormatError(f"{path}: missing manifest header")
    header = dict(part.split("=", 1) for part in lines[0].split()[1:])
    try:
        seed = int(header["seed"])
    except (KeyError, ValueError) as exc:
        raise ManifestFormatError(f"{path}: header must carry seed=<int>") from exc

    entries: list[ManifestEntry] = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip() or ln.startswith("#"):
            continue
        parts = ln.split("\t")
        if len(parts) != 7:
            raise ManifestFormatError(f"{path}:{lineno}: expected 7 columns, got {len(parts)}")
        clip_id, clip_path, kind, arch, utterance, split, laundering = parts
        try:
            label = ClipLabel(kind, None if arch == "-" else arch)
        except ValueError as exc:
            raise ManifestFormatError(f"{path}:{lineno}: {exc}") from exc
        entries.append(
            ManifestEntry(
                clip_id=clip_id,
                path=clip_path,
                label=label,
                utterance_id=utterance,
                split=None if split == "-" else split,
                laundering=None if laundering == "-" else LaunderingSpec.parse(laundering),
            )
        )
    return DatasetManifest(tuple(entries), seed)
