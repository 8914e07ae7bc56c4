"""Adversarial laundering: additive noise and lossy transcoding.

Each (label kind, split) stratum is partitioned into four near-equal
laundering classes — untouched, noise at a random SNR, AAC-style
transcode at a random bitrate, or both (transcode first, then noise) —
so that countermeasure robustness can be measured without confounding
the laundering with either label or split.
"""

from __future__ import annotations

import hashlib
import logging
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.fft import irfft, rfft

from .audio import AudioClip, normalize_amplitude, read_wav, resample, write_wav
from .errors import (
    EncoderFailed,
    EncoderUnavailable,
    SplitMissing,
    ZeroPowerSignal,
)
from .manifest import (
    LAUNDER_BOTH,
    LAUNDER_NOISE,
    LAUNDER_NONE,
    LAUNDER_TRANSCODE,
    DatasetManifest,
    LaunderingSpec,
    ManifestEntry,
)

logger = logging.getLogger(__name__)

SNR_RANGE_DB = (10.0, 80.0)
BITRATES_KBPS = (64, 127, 196)
MAX_ALIGN_SHIFT = 960  # 60 ms at 16 kHz
MAX_LENGTH_DRIFT = 0.06  # fraction of the clip's duration

# Remainder clips (stratum size not divisible by four) go to the
# earlier classes in this order.
_CLASS_ORDER = (LAUNDER_NONE, LAUNDER_NOISE, LAUNDER_TRANSCODE, LAUNDER_BOTH)


def assign_laundering(manifest: DatasetManifest) -> DatasetManifest:
    """Draw the laundering plan; splits must already be assigned.

    Within each (kind, split) stratum, clip-id-sorted entries are
    shuffled (seeded by the manifest seed) and dealt into the four
    classes as evenly as the stratum size allows.  SNRs are uniform in
    [10, 80] dB and bitrates uniform over {64, 127, 196} kbps.
    """
    if any(e.split is None for e in manifest.entries):
        raise SplitMissing("assign splits before drawing the laundering plan")

    rng = np.random.Generator(np.random.PCG64(manifest.seed))
    strata: dict[tuple[str, str], list[ManifestEntry]] = {}
    for e in manifest.entries:
        strata.setdefault((e.label.kind, e.split), []).append(e)

    plan: dict[str, LaunderingSpec] = {}
    for key in sorted(strata):
        entries = sorted(strata[key], key=lambda e: e.clip_id)
        n = len(entries)
        base, rem = divmod(n, 4)
        sizes = [base + (1 if i < rem else 0) for i in range(4)]
        perm = rng.permutation(n)
        shuffled = [entries[i] for i in perm]
        pos = 0
        for cls, size in zip(_CLASS_ORDER, sizes):
            for e in shuffled[pos : pos + size]:
                if cls == LAUNDER_NONE:
                    spec = LaunderingSpec(LAUNDER_NONE)
                elif cls == LAUNDER_NOISE:
                    spec = LaunderingSpec(
                        LAUNDER_NOISE, snr_db=float(rng.uniform(*SNR_RANGE_DB))
                    )
                elif cls == LAUNDER_TRANSCODE:
                    spec = LaunderingSpec(
                        LAUNDER_TRANSCODE,
                        bitrate_kbps=BITRATES_KBPS[int(rng.integers(len(BITRATES_KBPS)))],
                    )
                else:
                    spec = LaunderingSpec(
                        LAUNDER_BOTH,
                        snr_db=float(rng.uniform(*SNR_RANGE_DB)),
                        bitrate_kbps=BITRATES_KBPS[int(rng.integers(len(BITRATES_KBPS)))],
                    )
                plan[e.clip_id] = spec
            pos += size

    return DatasetManifest(
        tuple(replace(e, laundering=plan[e.clip_id]) for e in manifest.entries),
        manifest.seed,
    )


def clip_noise_seed(base_seed: int, clip_id: str) -> int:
    """Stable per-clip seed so reruns add identical noise."""
    digest = hashlib.sha256(f"{base_seed}:{clip_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def add_noise(clip: AudioClip, snr_db: float, seed: int) -> AudioClip:
    """Add white Gaussian noise at the requested signal-to-noise ratio.

    Noise variance is ``mean(x^2) / 10^(snr/10)``.  The sum is clipped
    back into [-1, 1]; clipped samples are counted and logged because
    heavy clipping biases the realized SNR.
    """
    power = float(np.mean(clip.samples**2))
    if power == 0.0:
        raise ZeroPowerSignal("cannot scale noise against an all-zero clip")
    sigma = float(np.sqrt(power / (10.0 ** (snr_db / 10.0))))
    rng = np.random.Generator(np.random.PCG64(seed))
    noisy = clip.samples + rng.normal(0.0, sigma, size=len(clip))
    n_clipped = int(np.count_nonzero(np.abs(noisy) > 1.0))
    if n_clipped:
        logger.info(
            "clip %s: %d samples clipped while adding noise at %.1f dB",
            clip.clip_id,
            n_clipped,
            snr_db,
        )
    return replace(clip, samples=np.clip(noisy, -1.0, 1.0))


@dataclass(frozen=True)
class EncoderConfig:
    """External codec invocation templates.

    ``encode_template`` receives ``{in}`` (WAV path), ``{out}``
    (compressed path) and ``{bitrate}`` (kbps); ``decode_template``
    receives ``{in}`` and ``{out}`` and must write 16 kHz mono WAV.
    """

    encode_template: str
    decode_template: str
    suffix: str = ".m4a"


def _run_template(template: str, mapping: dict[str, str]) -> None:
    parts = [_substitute(tok, mapping) for tok in shlex.split(template)]
    try:
        proc = subprocess.run(parts, capture_output=True, text=True, timeout=120)
    except FileNotFoundError as exc:
        raise EncoderUnavailable(f"codec binary not found: {parts[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise EncoderFailed(f"codec timed out: {' '.join(parts)}") from exc
    if proc.returncode != 0:
        raise EncoderFailed(
            f"codec exited {proc.returncode}: {' '.join(parts)}\n{proc.stderr.strip()}"
        )


def _substitute(token: str, mapping: dict[str, str]) -> str:
    for key, value in mapping.items():
        token = token.replace("{" + key + "}", value)
    return token


def _best_alignment(original: np.ndarray, decoded: np.ndarray) -> int:
    """Lag maximizing cross-correlation, limited to +-MAX_ALIGN_SHIFT."""
    n = max(len(original), len(decoded))
    n_fft = 1
    while n_fft < 2 * n:
        n_fft *= 2
    spec = rfft(decoded, n_fft) * np.conj(rfft(original, n_fft))
    corr = irfft(spec, n_fft)
    lags = np.concatenate((np.arange(0, MAX_ALIGN_SHIFT + 1), np.arange(-MAX_ALIGN_SHIFT, 0)))
    values = corr[lags % n_fft]
    return int(lags[int(np.argmax(values))])


def transcode(
    clip: AudioClip, bitrate_kbps: int, encoder: EncoderConfig | None
) -> AudioClip:
    """Round-trip a clip through an external lossy codec.

    The decoded audio is cross-correlation aligned against the input
    (codecs pad their output), trimmed or zero-padded to the original
    length, and peak-normalized again.
    """
    if encoder is None:
        raise EncoderUnavailable("no codec configured; set the encoder templates")
    with tempfile.TemporaryDirectory(prefix="voicedet-codec-") as tmp:
        tmp_path = Path(tmp)
        wav_in = tmp_path / "input.wav"
        compressed = tmp_path / ("compressed" + encoder.suffix)
        wav_out = tmp_path / "decoded.wav"
        write_wav(wav_in, clip)
        _run_template(
            encoder.encode_template,
            {"in": str(wav_in), "out": str(compressed), "bitrate": str(bitrate_kbps)},
        )
        if not compressed.exists() or compressed.stat().st_size == 0:
            raise EncoderFailed("codec produced no output")
        _run_template(
            encoder.decode_template, {"in": str(compressed), "out": str(wav_out)}
        )
        if not wav_out.exists():
            raise EncoderFailed("decoder produced no output")
        decoded = read_wav(wav_out, clip_id=clip.clip_id)

    if decoded.sample_rate_hz != clip.sample_rate_hz:
        decoded = resample(decoded, clip.sample_rate_hz)
    n = len(clip)
    if abs(len(decoded) - n) > MAX_LENGTH_DRIFT * n:
        raise EncoderFailed(
            f"decoded length {len(decoded)} drifts too far from original {n}"
        )

    lag = _best_alignment(clip.samples, decoded.samples)
    aligned = np.zeros(n)
    src_start = max(0, lag)
    dst_start = max(0, -lag)
    span = min(len(decoded) - src_start, n - dst_start)
    if span <= 0:
        raise EncoderFailed("decoded audio does not overlap the original after alignment")
    aligned[dst_start : dst_start + span] = decoded.samples[src_start : src_start + span]
    return normalize_amplitude(replace(clip, samples=aligned))


def launder_clip(
    clip: AudioClip,
    spec: LaunderingSpec,
    seed: int,
    encoder: EncoderConfig | None = None,
) -> AudioClip:
    """Apply one laundering spec; "both" transcodes first, then adds noise."""
    if spec.kind == LAUNDER_NONE:
        return clip
    if spec.kind == LAUNDER_NOISE:
        return add_noise(clip, spec.snr_db, seed)
    if spec.kind == LAUNDER_TRANSCODE:
        return transcode(clip, spec.bitrate_kbps, encoder)
    return add_noise(transcode(clip, spec.bitrate_kbps, encoder), spec.snr_db, seed)
