"""Canonical audio representation and WAV input/output.

Every clip entering the pipeline is converted to the same canonical form:
mono float64 samples in [-1, 1] at 16 kHz, peak-normalized.  The decoder
accepts integer PCM at 8/16/24/32 bits and IEEE float32; multi-channel
audio is averaged down to mono after scaling.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import EmptyClip, MalformedContainer, UnsupportedEncoding
from .validation import check_positive

TARGET_SAMPLE_RATE_HZ = 16000

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3
_PCM_BIT_DEPTHS = (8, 16, 24, 32)

# Resampler design: Kaiser-windowed sinc low-pass with >= 80 dB stopband
# attenuation (beta per Kaiser's formula) and 32 zero crossings per side.
_KAISER_BETA = 0.1102 * (80.0 - 8.7)
_FILTER_HALF_WIDTH = 32


@dataclass(frozen=True)
class ClipLabel:
    """Ground-truth label: real speech or synthetic plus its generator."""

    kind: str
    architecture: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("real", "synthetic"):
            raise ValueError(f"label kind must be 'real' or 'synthetic', got {self.kind!r}")
        if self.kind == "synthetic" and not self.architecture:
            raise ValueError("synthetic clips must name their generator architecture")
        if self.kind == "real" and self.architecture is not None:
            raise ValueError("real clips must not carry an architecture tag")


@dataclass(frozen=True)
class AudioClip:
    """Immutable audio clip: float64 mono samples plus bookkeeping."""

    clip_id: str
    samples: np.ndarray
    sample_rate_hz: int
    label: ClipLabel | None = None
    degenerate_silence: bool = False

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be mono (1-D), got shape {samples.shape}")
        check_positive(self.sample_rate_hz, "sample_rate_hz")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


def _read_chunks(raw: bytes) -> dict[bytes, bytes]:
    """Split a RIFF/WAVE byte stream into its chunks."""
    if len(raw) < 12:
        raise MalformedContainer("file too short for a RIFF header")
    if raw[0:4] != b"RIFF":
        raise MalformedContainer("missing RIFF magic")
    (riff_size,) = struct.unpack_from("<I", raw, 4)
    if riff_size + 8 > len(raw):
        raise MalformedContainer("RIFF size exceeds file length (truncated?)")
    if raw[8:12] != b"WAVE":
        raise MalformedContainer("missing WAVE form type")

    chunks: dict[bytes, bytes] = {}
    pos = 12
    end = min(len(raw), riff_size + 8)
    while pos + 8 <= end:
        cid = raw[pos : pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body_end = pos + 8 + size
        if body_end > end:
            raise MalformedContainer(f"chunk {cid!r} overruns the container")
        if cid not in chunks:  # first occurrence wins
            chunks[cid] = raw[pos + 8 : body_end]
        pos = body_end + (size & 1)  # chunks are word-aligned
    return chunks


def _decode_pcm(data: bytes, bits: int) -> np.ndarray:
    """Decode little-endian integer PCM to float64 in [-1, 1]."""
    if bits == 8:
        # 8-bit WAV is unsigned with a 128 offset.
        vals = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
        return (vals - 128.0) / 128.0
    if bits == 16:
        vals = np.frombuffer(data, dtype="<i2").astype(np.float64)
        return vals / 32768.0
    if bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3)
        vals = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        return vals.astype(np.float64) / float(1 << 23)
    if bits == 32:
        vals = np.frombuffer(data, dtype="<i4").astype(np.float64)
        return vals / float(1 << 31)
    raise UnsupportedEncoding(f"unsupported PCM bit depth: {bits}")


def decode_wav(raw: bytes, clip_id: str = "") -> AudioClip:
    """Decode a WAV byte stream into a canonical mono float clip.

    Raises :class:`MalformedContainer` for structural problems and
    :class:`UnsupportedEncoding` for format tags or bit depths outside
    integer PCM 8/16/24/32 and IEEE float32.
    """
    chunks = _read_chunks(raw)
    if b"fmt " not in chunks:
        raise MalformedContainer("missing fmt chunk")
    if b"data" not in chunks:
        raise MalformedContainer("missing data chunk")

    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise MalformedContainer("fmt chunk too short")
    audio_format, n_channels, sample_rate, _, block_align, bits = struct.unpack_from(
        "<HHIIHH", fmt, 0
    )
    if n_channels < 1:
        raise MalformedContainer("channel count must be >= 1")
    if sample_rate < 1:
        raise MalformedContainer("sample rate must be >= 1")

    data = chunks[b"data"]
    if audio_format == _WAVE_FORMAT_PCM:
        if bits not in _PCM_BIT_DEPTHS:
            raise UnsupportedEncoding(f"unsupported PCM bit depth: {bits}")
        expected_align = n_channels * (bits // 8)
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedEncoding(f"float WAV must be 32-bit, got {bits}")
        expected_align = n_channels * 4
    else:
        raise UnsupportedEncoding(f"unsupported WAV format tag: {audio_format}")

    if block_align not in (0, expected_align):
        raise MalformedContainer(
            f"block alignment {block_align} inconsistent with {bits}-bit x {n_channels}ch"
        )
    if len(data) % expected_align != 0:
        raise MalformedContainer("data chunk length is not a whole number of frames")

    if audio_format == _WAVE_FORMAT_IEEE_FLOAT:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        samples = _decode_pcm(data, bits)

    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)

    return AudioClip(clip_id=clip_id, samples=samples, sample_rate_hz=int(sample_rate))


def encode_wav(clip: AudioClip, bit_depth: int = 16, float_format: bool = False) -> bytes:
    """Encode a clip as a mono WAV byte stream.

    Integer depths quantize with round-half-away and clamp to the
    representable range; ``float_format`` writes IEEE float32 instead.
    """
    x = clip.samples
    if float_format:
        payload = x.astype("<f4").tobytes()
        bits, audio_format = 32, _WAVE_FORMAT_IEEE_FLOAT
    else:
        if bit_depth not in _PCM_BIT_DEPTHS:
            raise UnsupportedEncoding(f"unsupported PCM bit depth: {bit_depth}")
        bits, audio_format = bit_depth, _WAVE_FORMAT_PCM
        full = float(1 << (bits - 1))
        q = np.clip(np.round(x * full), -full, full - 1).astype(np.int64)
        if bits == 8:
            payload = (q + 128).astype(np.uint8).tobytes()
        elif bits == 16:
            payload = q.astype("<i2").tobytes()
        elif bits == 24:
            u = (q & 0xFFFFFF).astype(np.uint32)
            b = np.empty((len(q), 3), dtype=np.uint8)
            b[:, 0] = u & 0xFF
            b[:, 1] = (u >> 8) & 0xFF
            b[:, 2] = (u >> 16) & 0xFF
            payload = b.tobytes()
        else:
            payload = q.astype("<i4").tobytes()

    block_align = bits // 8
    byte_rate = clip.sample_rate_hz * block_align
    fmt = struct.pack(
        "<HHIIHH", audio_format, 1, clip.sample_rate_hz, byte_rate, block_align, bits
    )
    body = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body


def read_wav(path: str | Path, clip_id: str | None = None) -> AudioClip:
    """Read a WAV file; the clip id defaults to the file stem."""
    path = Path(path)
    clip = decode_wav(path.read_bytes(), clip_id=clip_id if clip_id is not None else path.stem)
    return clip


def write_wav(path: str | Path, clip: AudioClip, bit_depth: int = 16) -> None:
    Path(path).write_bytes(encode_wav(clip, bit_depth=bit_depth))


def _resampler_taps(up: int, down: int) -> np.ndarray:
    """Anti-aliasing FIR for polyphase resampling by up/down."""
    max_rate = max(up, down)
    n_taps = 2 * _FILTER_HALF_WIDTH * max_rate + 1
    return signal.firwin(n_taps, 1.0 / max_rate, window=("kaiser", _KAISER_BETA))


def resample(clip: AudioClip, target_hz: int = TARGET_SAMPLE_RATE_HZ) -> AudioClip:
    """Resample to ``target_hz`` with a windowed-sinc polyphase filter.

    Output length is ``len(clip) * target_hz / rate`` rounded to within
    one sample.  Identity when the clip is already at the target rate.
    """
    check_positive(target_hz, "target_hz")
    if len(clip) == 0:
        raise EmptyClip("cannot resample an empty clip")
    if clip.sample_rate_hz == target_hz:
        return clip

    g = math.gcd(target_hz, clip.sample_rate_hz)
    up, down = target_hz // g, clip.sample_rate_hz // g
    resampled = signal.resample_poly(clip.samples, up, down, window=_resampler_taps(up, down))
    return replace(clip, samples=resampled, sample_rate_hz=int(target_hz))


def normalize_amplitude(clip: AudioClip) -> AudioClip:
    """Scale so the absolute peak is exactly 1.

    All-zero clips cannot be scaled; they are returned unchanged with
    ``degenerate_silence`` set so later stages can reject them.
    """
    if len(clip) == 0:
        raise EmptyClip("cannot normalize an empty clip")
    peak = float(np.max(np.abs(clip.samples)))
    if peak == 0.0:
        return replace(clip, degenerate_silence=True)
    return replace(clip, samples=clip.samples / peak)


def canonicalize(clip: AudioClip, target_hz: int = TARGET_SAMPLE_RATE_HZ) -> AudioClip:
    """Resample to the target rate, then peak-normalize."""
    return normalize_amplitude(resample(clip, target_hz))
