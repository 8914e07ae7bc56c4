"""Perceptual (temporal-domain) features: pauses and amplitude dynamics.

Synthetic speech tends to pause less and sit at a different loudness
level than natural speech.  This module measures both effects: pause
segments found with a rolling-mean amplitude gate, and amplitude
statistics taken on a low-pass-smoothed envelope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import signal, special
from sklearn.base import BaseEstimator, TransformerMixin

from .audio import AudioClip
from .errors import (
    ClipTooShort,
    DegenerateSilence,
    EmptyEnvelope,
    InsufficientData,
    InvalidCutoff,
    SegmentOutOfRange,
    ZeroVariance,
)

PAUSE_WINDOW_SAMPLES = 100
PAUSE_THRESHOLD_FRACTION = 0.005  # of the clip's absolute peak
DEFAULT_ENVELOPE_CUTOFF_HZ = 10.0

PERCEPTUAL_FEATURE_NAMES = (
    "pause_ratio",
    "pause_mean_len",
    "pause_len_std",
    "pause_count",
    "envelope_mean",
    "envelope_delta_mean",
)


class PauseSegment(NamedTuple):
    """Half-open sample range [start, end) judged to be a pause."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start


def detect_pauses(clip: AudioClip) -> list[PauseSegment]:
    """Find low-amplitude stretches using a rolling-mean gate.

    A window of 100 samples is slid one sample at a time; window starts
    whose mean absolute amplitude falls below 0.5% of the clip's peak
    are marked, and runs of marked starts become pause segments covering
    the full extent of their windows.  Overlapping segments are merged.
    An all-zero clip is one pause spanning the whole clip.
    """
    n = len(clip)
    if n < PAUSE_WINDOW_SAMPLES:
        raise ClipTooShort(
            f"pause detection needs >= {PAUSE_WINDOW_SAMPLES} samples, got {n}"
        )
    a = np.abs(clip.samples)
    peak = float(a.max())
    if peak == 0.0:
        return [PauseSegment(0, n)]

    # Rolling mean over every window start via a cumulative sum.
    csum = np.concatenate(([0.0], np.cumsum(a)))
    window_means = (
        csum[PAUSE_WINDOW_SAMPLES:] - csum[:-PAUSE_WINDOW_SAMPLES]
    ) / PAUSE_WINDOW_SAMPLES
    marked = window_means < PAUSE_THRESHOLD_FRACTION * peak

    segments: list[PauseSegment] = []
    idx = np.flatnonzero(marked)
    if idx.size == 0:
        return segments
    breaks = np.flatnonzero(np.diff(idx) > 1)
    run_starts = np.concatenate(([0], breaks + 1))
    run_ends = np.concatenate((breaks, [idx.size - 1]))
    for rs, re in zip(run_starts, run_ends):
        start = int(idx[rs])
        end = int(idx[re]) + PAUSE_WINDOW_SAMPLES
        if segments and start <= segments[-1].end:
            segments[-1] = PauseSegment(segments[-1].start, max(segments[-1].end, end))
        else:
            segments.append(PauseSegment(start, end))
    return segments


def pause_statistics(
    pauses: Sequence[PauseSegment], clip_length: int
) -> tuple[float, float, float, int]:
    """Summarize pauses: (ratio of clip paused, mean length, length std, count).

    Lengths are in samples; the std is the population standard deviation.
    Segments must be sorted, disjoint and inside [0, clip_length).
    """
    if clip_length <= 0:
        raise SegmentOutOfRange("clip_length must be positive")
    prev_end = 0
    for seg in pauses:
        if not (0 <= seg.start < seg.end <= clip_length):
            raise SegmentOutOfRange(f"segment {seg} outside clip of {clip_length} samples")
        if seg.start < prev_end:
            raise SegmentOutOfRange(f"segment {seg} overlaps its predecessor")
        prev_end = seg.end
    if not pauses:
        return 0.0, 0.0, 0.0, 0
    lengths = np.array([seg.length for seg in pauses], dtype=np.float64)
    ratio = float(lengths.sum() / clip_length)
    return ratio, float(lengths.mean()), float(lengths.std()), len(pauses)


def smooth_envelope(
    clip: AudioClip, cutoff_hz: float = DEFAULT_ENVELOPE_CUTOFF_HZ
) -> np.ndarray:
    """Amplitude envelope: |x| through a zero-phase 5th-order Butterworth.

    The filter runs as second-order sections — at envelope-scale cutoffs
    (10 Hz against a 16 kHz rate) a single transfer function is too
    ill-conditioned to evaluate.  Forward-backward filtering keeps the
    envelope aligned with the waveform; padding is sized from the
    slowest pole so edge transients die out, and tiny negative
    undershoots are clamped so the result is a valid amplitude.
    """
    if not 0.0 < cutoff_hz < clip.sample_rate_hz / 2.0:
        raise InvalidCutoff(
            f"cutoff must lie in (0, {clip.sample_rate_hz / 2}), got {cutoff_hz}"
        )
    if len(clip) == 0:
        raise EmptyEnvelope("cannot smooth an empty clip")
    rectified = np.abs(clip.samples)
    sos = signal.butter(5, cutoff_hz, fs=clip.sample_rate_hz, output="sos")
    pole_radius = max(
        float(np.max(np.abs(np.roots(np.concatenate(([1.0], sec[4:6]))))))
        for sec in sos
    )
    if 0.0 < pole_radius < 1.0:
        settle = int(np.ceil(np.log(1e-9) / np.log(pole_radius)))
    else:
        settle = 3 * len(rectified)
    padlen = min(len(rectified) - 1, settle)
    env = signal.sosfiltfilt(sos, rectified, padlen=padlen)
    return np.maximum(env, 0.0)


def amplitude_features(envelope: np.ndarray) -> tuple[float, float]:
    """(mean level, mean absolute first difference) of an envelope."""
    env = np.asarray(envelope, dtype=np.float64)
    if env.size == 0:
        raise EmptyEnvelope("envelope is empty")
    if env.size == 1:
        return float(env[0]), 0.0
    return float(env.mean()), float(np.mean(np.abs(np.diff(env))))


@dataclass(frozen=True)
class PerceptualFeatures:
    """Six-number perceptual summary of one clip."""

    pause_ratio: float
    pause_mean_len: float
    pause_len_std: float
    pause_count: int
    envelope_mean: float
    envelope_delta_mean: float

    def as_vector(self) -> np.ndarray:
        return np.array(
            [
                self.pause_ratio,
                self.pause_mean_len,
                self.pause_len_std,
                float(self.pause_count),
                self.envelope_mean,
                self.envelope_delta_mean,
            ],
            dtype=np.float64,
        )


def perceptual_features(
    clip: AudioClip, cutoff_hz: float = DEFAULT_ENVELOPE_CUTOFF_HZ
) -> PerceptualFeatures:
    """Compute the full perceptual feature set for one clip."""
    if clip.degenerate_silence or (len(clip) > 0 and float(np.max(np.abs(clip.samples))) == 0.0):
        raise DegenerateSilence(f"clip {clip.clip_id!r} is silent; no features defined")
    pauses = detect_pauses(clip)
    ratio, mean_len, len_std, count = pause_statistics(pauses, len(clip))
    env_mean, env_delta = amplitude_features(smooth_envelope(clip, cutoff_hz))
    return PerceptualFeatures(ratio, mean_len, len_std, count, env_mean, env_delta)


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided Welch t-test for unequal variances.

    Returns ``(statistic, p_value)`` with the Welch-Satterthwaite
    degrees of freedom.  Two constant groups with equal means give
    (0, 1); with different means the test is undefined.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InsufficientData("each group needs at least two observations")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        if a.mean() == b.mean():
            return 0.0, 1.0
        raise ZeroVariance("both groups constant with different means")
    sa, sb = va / a.size, vb / b.size
    t = (a.mean() - b.mean()) / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = 2.0 * float(special.stdtr(df, -abs(t)))
    return float(t), p


class PerceptualExtractor(BaseEstimator, TransformerMixin):
    """Transformer mapping clips to the six perceptual features."""

    def __init__(self, cutoff_hz: float = DEFAULT_ENVELOPE_CUTOFF_HZ):
        self.cutoff_hz = cutoff_hz

    def fit(self, clips: Sequence[AudioClip], y=None) -> "PerceptualExtractor":
        # Stateless: nothing is estimated from the data.
        return self

    def transform(self, clips: Sequence[AudioClip]) -> np.ndarray:
        rows = [perceptual_features(c, self.cutoff_hz).as_vector() for c in clips]
        return np.vstack(rows) if rows else np.empty((0, len(PERCEPTUAL_FEATURE_NAMES)))

    @property
    def feature_names_(self) -> list[str]:
        return list(PERCEPTUAL_FEATURE_NAMES)
