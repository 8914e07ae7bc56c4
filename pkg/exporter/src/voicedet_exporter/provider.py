"""Embedding providers: the built-in spectral summary and plug-ins.

A provider is a callable ``f(batch, sample_rate_hz) -> ndarray`` mapping
a list of mono float sample arrays to an ``(len(batch), 192)`` matrix.
Real speaker-verification networks plug in as ``module:callable``; the
built-in ``melstats-v1`` provider is a deterministic, dependency-free
stand-in (64 mel-band log energies summarized by mean, spread and trend)
so the export pipeline is fully testable without a model download.
"""

import importlib
from typing import Callable, Sequence

import numpy as np

from .errors import ModelLoadFailure

BUILTIN_MODEL = "melstats-v1"
EMBEDDING_DIM = 192

_N_BANDS = 64
_FRAME = 400
_HOP = 160
_N_FFT = 512
_LOG_FLOOR = 1e-10

Provider = Callable[[Sequence[np.ndarray], int], np.ndarray]


def _hz_to_mel(hz: np.ndarray) -> np.ndarray:
    return 2595.0 * np.log10(1.0 + hz / 700.0)


def _mel_bank(sample_rate_hz: int) -> np.ndarray:
    """Triangular filters, (n_bands, n_fft // 2 + 1)."""
    freqs = np.arange(_N_FFT // 2 + 1) * sample_rate_hz / _N_FFT
    edges_mel = np.linspace(0.0, _hz_to_mel(np.array(sample_rate_hz / 2.0)), _N_BANDS + 2)
    edges_hz = 700.0 * (10.0 ** (edges_mel / 2595.0) - 1.0)
    bank = np.zeros((_N_BANDS, freqs.size))
    for b in range(_N_BANDS):
        lo, mid, hi = edges_hz[b : b + 3]
        rising = (freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - freqs) / max(hi - mid, 1e-12)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def melstats_v1(batch: Sequence[np.ndarray], sample_rate_hz: int) -> np.ndarray:
    """64 mel bands x (mean, std, slope) of log energy = 192 dims per clip."""
    bank = _mel_bank(sample_rate_hz)
    window = np.hanning(_FRAME)
    out = np.empty((len(batch), EMBEDDING_DIM))
    for row, samples in enumerate(batch):
        x = np.asarray(samples, dtype=np.float64)
        if x.size < _FRAME:
            x = np.pad(x, (0, _FRAME - x.size))
        n_frames = 1 + (x.size - _FRAME) // _HOP
        idx = np.arange(_FRAME) + _HOP * np.arange(n_frames)[:, None]
        spectra = np.fft.rfft(x[idx] * window, n=_N_FFT, axis=1)
        power = spectra.real**2 + spectra.imag**2
        log_bands = np.log(power @ bank.T + _LOG_FLOOR)  # (n_frames, bands)

        means = log_bands.mean(axis=0)
        stds = log_bands.std(axis=0)
        t = np.arange(n_frames) - (n_frames - 1) / 2.0
        denom = float((t**2).sum())
        slopes = (t @ log_bands) / denom if denom > 0.0 else np.zeros(_N_BANDS)
        out[row] = np.concatenate([means, stds, slopes])
    return out


def load_provider(model_id: str) -> Provider:
    """Resolve a model identifier to a provider callable.

    ``melstats-v1`` is built in; anything containing a colon is treated
    as ``module:callable`` and imported.
    """
    if model_id == BUILTIN_MODEL:
        return melstats_v1
    if ":" not in model_id:
        raise ModelLoadFailure(
            f"unknown model {model_id!r}; use {BUILTIN_MODEL!r} or 'module:callable'"
        )
    module_name, _, attr = model_id.partition(":")
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise ModelLoadFailure(f"cannot import provider module {module_name!r}: {exc}") from exc
    provider = getattr(module, attr, None)
    if not callable(provider):
        raise ModelLoadFailure(f"{model_id!r} does not name a callable")
    return provider
