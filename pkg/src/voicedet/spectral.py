"""Spectral features: frame-level descriptors, functionals and LPC.

Clips are cut into 25 ms frames with a 10 ms hop.  Each frame yields 23
low-level descriptors (energy, spectral shape, 13 MFCCs, pitch and
voicing); eleven summary functionals over each descriptor track plus 12
linear-prediction coefficients give a 265-dimensional clip vector.  A
forest-based selector then reduces that to the 20 most informative
columns before classification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.fft import dct, irfft, rfft
from sklearn.base import BaseEstimator, TransformerMixin

from .audio import AudioClip
from .errors import (
    ClipTooShort,
    DegenerateLabels,
    DegenerateSilence,
    SingularAutocorrelation,
    TooFewFrames,
)
from .validation import check_feature_matrix

DEFAULT_FRAME_MS = 25.0
DEFAULT_HOP_MS = 10.0
N_MFCC = 13
N_MEL_BANDS = 26
LPC_ORDER = 12
F0_MIN_HZ = 50.0
F0_MAX_HZ = 400.0
_EPS = 1e-10

LLD_NAMES = (
    "rms",
    "log_energy",
    "zcr",
    "centroid_hz",
    "rolloff85_hz",
    "rolloff95_hz",
    "flux",
    "flatness",
    *[f"mfcc_{i:02d}" for i in range(N_MFCC)],
    "f0_hz",
    "voicing",
)

FUNCTIONAL_NAMES = (
    "mean",
    "std",
    "min",
    "max",
    "range",
    "skew",
    "kurtosis",
    "slope",
    "resid_rms",
    "p10",
    "p90",
)


@dataclass(frozen=True)
class FrameMatrix:
    """Windowed analysis frames plus the geometry used to cut them."""

    frames: np.ndarray  # (n_frames, frame_len)
    sample_rate_hz: int
    frame_len: int
    hop: int
    window: str

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def _window_values(name: str, length: int) -> np.ndarray:
    if name == "hamming":
        return np.hamming(length)
    if name == "hann":
        return np.hanning(length)
    if name == "rectangular":
        return np.ones(length)
    raise ValueError(f"unknown window {name!r}")


def frame_signal(
    clip: AudioClip,
    frame_ms: float = DEFAULT_FRAME_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    window: str = "hamming",
) -> FrameMatrix:
    """Cut a clip into overlapping windowed frames.

    Frame count is ``floor((n - frame_len) / hop) + 1``; trailing
    samples that cannot fill a frame are dropped.
    """
    sr = clip.sample_rate_hz
    frame_len = int(round(frame_ms * sr / 1000.0))
    hop = int(round(hop_ms * sr / 1000.0))
    if frame_len < 2 or hop < 1:
        raise ValueError("frame and hop must be at least 2 and 1 samples")
    n = len(clip)
    if n < frame_len:
        raise ClipTooShort(f"clip of {n} samples is shorter than one {frame_len}-sample frame")
    n_frames = (n - frame_len) // hop + 1
    view = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_len)[::hop]
    frames = view[:n_frames] * _window_values(window, frame_len)
    return FrameMatrix(frames, sr, frame_len, hop, window)


def _mel_filterbank(sr: int, n_fft: int, n_bands: int) -> np.ndarray:
    """Triangular mel filters over the one-sided FFT bins."""
    def to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def from_mel(m):
        return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)

    edges_hz = from_mel(np.linspace(0.0, float(to_mel(sr / 2.0)), n_bands + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    bank = np.zeros((n_bands, bin_freqs.size))
    for i in range(n_bands):
        lo, mid, hi = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        up = (bin_freqs - lo) / max(mid - lo, _EPS)
        down = (hi - bin_freqs) / max(hi - mid, _EPS)
        bank[i] = np.maximum(0.0, np.minimum(up, down))
    return bank


def _window_autocorr(window: np.ndarray, n_fft: int) -> np.ndarray:
    spec = np.abs(rfft(window, n_fft)) ** 2
    return irfft(spec, n_fft)[: window.size]


def _f0_and_voicing(fm: FrameMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Autocorrelation pitch tracker with window-bias-corrected voicing.

    The search starts at the first negative-going autocorrelation lag
    and the peak value is normalized by the window's own
    autocorrelation, so a clean sinusoid scores voicing close to 1.
    """
    sr = fm.sample_rate_hz
    frame_len = fm.frame_len
    n_fft = 1
    while n_fft < 2 * frame_len:
        n_fft *= 2
    spec = np.abs(rfft(fm.frames, n_fft, axis=1)) ** 2
    acf = irfft(spec, n_fft, axis=1)[:, :frame_len]
    w_acf = _window_autocorr(_window_values(fm.window, frame_len), n_fft)

    lag_max = min(int(sr / F0_MIN_HZ), frame_len - 1)

    f0 = np.zeros(fm.n_frames)
    voicing = np.zeros(fm.n_frames)
    for i in range(fm.n_frames):
        r = acf[i]
        if r[0] <= 0.0:
            continue
        negatives = np.flatnonzero(r[1 : lag_max + 1] < 0.0)
        if negatives.size == 0:
            continue
        lag_lo = int(negatives[0]) + 1
        if lag_lo > lag_max:
            continue
        lags = np.arange(lag_lo, lag_max + 1)
        # Remove the triangular window bias so peak height ~ periodicity.
        norm = (r[lags] / r[0]) * (w_acf[0] / w_acf[lags])
        best = float(norm.max())
        if best <= 0.0:
            continue
        # Earliest lag within half a percent of the peak: prefers the
        # fundamental over its subharmonics on near-flat peaks.
        lag = int(lags[np.flatnonzero(norm >= 0.995 * best)[0]])
        freq = sr / lag
        if F0_MIN_HZ <= freq <= F0_MAX_HZ:
            f0[i] = freq
            voicing[i] = float(np.clip(norm[lag - lag_lo], 0.0, 1.0))
    return f0, voicing


def compute_llds(fm: FrameMatrix) -> np.ndarray:
    """23 low-level descriptors per frame; columns follow ``LLD_NAMES``."""
    frames = fm.frames
    sr = fm.sample_rate_hz
    n_frames, frame_len = frames.shape

    n_fft = 1
    while n_fft < frame_len:
        n_fft *= 2
    mag = np.abs(rfft(frames, n_fft, axis=1))
    power = mag**2
    freqs = np.arange(n_fft // 2 + 1) * sr / n_fft

    rms = np.sqrt(np.mean(frames**2, axis=1))
    log_energy = np.log(np.mean(frames**2, axis=1) + _EPS)

    signs = frames[:, :-1] * frames[:, 1:]
    zcr = np.count_nonzero(signs < 0.0, axis=1) / (frame_len - 1)

    power_total = power.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        centroid = np.where(power_total > 0.0, (power @ freqs) / power_total, 0.0)

    cum = np.cumsum(power, axis=1)

    def rolloff(fraction: float) -> np.ndarray:
        target = fraction * power_total
        idx = np.argmax(cum >= target[:, None], axis=1)
        return np.where(power_total > 0.0, freqs[idx], 0.0)

    roll85 = rolloff(0.85)
    roll95 = rolloff(0.95)

    flux = np.zeros(n_frames)
    if n_frames > 1:
        flux[1:] = np.linalg.norm(np.diff(mag, axis=0), axis=1)

    p = np.maximum(power, _EPS)
    flatness = np.exp(np.mean(np.log(p), axis=1)) / np.mean(p, axis=1)

    mel_energy = power @ _mel_filterbank(sr, n_fft, N_MEL_BANDS).T
    log_mel = np.log(np.maximum(mel_energy, _EPS))
    mfcc = dct(log_mel, type=2, norm="ortho", axis=1)[:, :N_MFCC]

    f0, voicing = _f0_and_voicing(fm)

    return np.column_stack(
        [rms, log_energy, zcr, centroid, roll85, roll95, flux, flatness, mfcc, f0, voicing]
    )


def lpc_coefficients(clip: AudioClip, order: int = LPC_ORDER) -> tuple[np.ndarray, bool]:
    """Linear-prediction coefficients via Levinson-Durbin.

    Returns ``(coeffs, singular)``; the coefficients follow the error
    polynomial ``e[n] = x[n] + sum_k a_k x[n-k]``, so an AR(1) source
    ``x[n] = 0.9 x[n-1] + noise`` yields ``a_1`` near -0.9.  A singular
    autocorrelation (all-zero input) returns zeros with the flag set.
    """
    x = clip.samples
    if len(x) <= order:
        raise ClipTooShort(f"need more than {order} samples for order-{order} LPC")
    windowed = x * np.hamming(len(x))
    r = np.array([np.dot(windowed[: len(x) - k], windowed[k:]) for k in range(order + 1)])
    if r[0] <= 0.0:
        return np.zeros(order), True

    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1 : 0 : -1])
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][:i]
        err *= 1.0 - k * k
        if err <= 0.0:
            return np.zeros(order), True
    return a[1:], False


def _column_functionals(track: np.ndarray) -> np.ndarray:
    """Eleven summary statistics of one descriptor track."""
    n = track.size
    mean = track.mean()
    std = track.std()
    lo = track.min()
    hi = track.max()
    if std > 0.0:
        z = (track - mean) / std
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4) - 3.0)
    else:
        skew = 0.0
        kurt = 0.0
    t = np.arange(n, dtype=np.float64)
    t_c = t - t.mean()
    slope = float(np.dot(t_c, track - mean) / np.dot(t_c, t_c))
    resid = track - (mean + slope * t_c)
    resid_rms = float(np.sqrt(np.mean(resid**2)))
    p10, p90 = np.percentile(track, [10.0, 90.0])
    return np.array(
        [mean, std, lo, hi, hi - lo, skew, kurt, slope, resid_rms, p10, p90]
    )


@dataclass(frozen=True)
class SpectralFeatureVector:
    """Clip-level spectral vector with its column names."""

    values: np.ndarray
    schema: tuple[str, ...]


def spectral_schema(
    lld_names: Sequence[str] = LLD_NAMES, lpc_order: int = LPC_ORDER
) -> tuple[str, ...]:
    names = [f"{lld}:{fn}" for lld in lld_names for fn in FUNCTIONAL_NAMES]
    names += [f"lpc_{i + 1:02d}" for i in range(lpc_order)]
    return tuple(names)


def apply_functionals(llds: np.ndarray, lpc: np.ndarray) -> SpectralFeatureVector:
    """Summarize descriptor tracks and append the LPC coefficients."""
    llds = np.asarray(llds, dtype=np.float64)
    if llds.ndim != 2 or llds.shape[0] < 2:
        raise TooFewFrames("functionals need at least two frames")
    parts = [_column_functionals(llds[:, j]) for j in range(llds.shape[1])]
    values = np.concatenate(parts + [np.asarray(lpc, dtype=np.float64)])
    return SpectralFeatureVector(values, spectral_schema(lpc_order=len(lpc)))


def spectral_features(
    clip: AudioClip,
    frame_ms: float = DEFAULT_FRAME_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    window: str = "hamming",
    lpc_order: int = LPC_ORDER,
) -> SpectralFeatureVector:
    """Full spectral vector for one clip (functionals + LPC)."""
    if clip.degenerate_silence or (len(clip) > 0 and float(np.max(np.abs(clip.samples))) == 0.0):
        raise DegenerateSilence(f"clip {clip.clip_id!r} is silent; no features defined")
    fm = frame_signal(clip, frame_ms, hop_ms, window)
    llds = compute_llds(fm)
    coeffs, singular = lpc_coefficients(clip, lpc_order)
    if singular:
        raise SingularAutocorrelation(f"clip {clip.clip_id!r} has singular autocorrelation")
    return apply_functionals(llds, coeffs)


class SpectralExtractor(BaseEstimator, TransformerMixin):
    """Transformer mapping clips to the 265-dimensional spectral vector."""

    def __init__(
        self,
        frame_ms: float = DEFAULT_FRAME_MS,
        hop_ms: float = DEFAULT_HOP_MS,
        window: str = "hamming",
        lpc_order: int = LPC_ORDER,
    ):
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms
        self.window = window
        self.lpc_order = lpc_order

    def fit(self, clips: Sequence[AudioClip], y=None) -> "SpectralExtractor":
        return self

    def transform(self, clips: Sequence[AudioClip]) -> np.ndarray:
        rows = [
            spectral_features(
                c, self.frame_ms, self.hop_ms, self.window, self.lpc_order
            ).values
            for c in clips
        ]
        return np.vstack(rows) if rows else np.empty((0, len(self.schema_)))

    @property
    def schema_(self) -> tuple[str, ...]:
        return spectral_schema(lpc_order=self.lpc_order)


# --- scaling and selection ----------------------------------------------

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class ScalerStats:
    """Per-column mean and (floored) standard deviation."""

    mean: np.ndarray
    std: np.ndarray


def standardize_fit(X: np.ndarray) -> ScalerStats:
    """Column means/stds from training data; constant columns get a
    floored std so they standardize to exactly zero instead of blowing up."""
    X = check_feature_matrix(X)
    if X.shape[0] < 1:
        raise ValueError("need at least one row to fit a scaler")
    std = X.std(axis=0)
    return ScalerStats(X.mean(axis=0), np.maximum(std, STD_FLOOR))


def standardize_apply(X: np.ndarray, stats: ScalerStats) -> np.ndarray:
    X = check_feature_matrix(X)
    if X.shape[1] != stats.mean.shape[0]:
        raise ValueError(
            f"matrix has {X.shape[1]} columns, scaler was fit on {stats.mean.shape[0]}"
        )
    return (X - stats.mean) / stats.std


class Standardizer(BaseEstimator, TransformerMixin):
    """Zero-mean unit-variance scaler with a variance floor."""

    def fit(self, X, y=None) -> "Standardizer":
        self.stats_ = standardize_fit(X)
        return self

    def transform(self, X) -> np.ndarray:
        return standardize_apply(X, self.stats_)


@dataclass(frozen=True)
class FeatureSelection:
    """Result of forest-based selection: kept columns and evidence."""

    selected_indices: tuple[int, ...]
    importances: np.ndarray
    seed: int


def select_features(X: np.ndarray, y: np.ndarray, k: int = 20, seed: int = 0) -> FeatureSelection:
    """Keep the ``k`` columns with the highest forest importances.

    An auxiliary random forest is trained on the standardized matrix;
    mean-impurity-decrease importances rank the columns.  Ties are
    broken toward the lower column index, and the selected indices are
    reported in ascending schema order.
    """
    from .classify import RandomForest  # local import: avoids a module cycle

    X = check_feature_matrix(X)
    y = np.asarray(y)
    n, d = X.shape
    if n < 10:
        raise ValueError(f"selection needs at least 10 rows, got {n}")
    if d < k:
        raise ValueError(f"cannot select {k} of {d} columns")
    if np.unique(y).size < 2:
        raise DegenerateLabels("selection needs at least two distinct labels")

    Xs = standardize_apply(X, standardize_fit(X))
    forest = RandomForest(seed=seed)
    forest.fit(Xs, y)
    importances = forest.feature_importances_
    ranked = sorted(range(d), key=lambda j: (-importances[j], j))
    selected = tuple(sorted(ranked[:k]))
    return FeatureSelection(selected, importances, seed)


class ForestFeatureSelector(BaseEstimator, TransformerMixin):
    """Transformer keeping the top-k forest-ranked columns."""

    def __init__(self, k: int = 20, seed: int = 0):
        self.k = k
        self.seed = seed

    def fit(self, X, y) -> "ForestFeatureSelector":
        self.selection_ = select_features(X, y, k=self.k, seed=self.seed)
        return self

    def transform(self, X) -> np.ndarray:
        X = check_feature_matrix(X)
        return X[:, list(self.selection_.selected_indices)]
